#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "planforge/backend.hpp"
#include "planforge/error.hpp"

namespace planforge {

/// A backend bound to one role's configuration.
struct Agent {
  Backend& backend;
  AgentConfig config;

  std::string ask(const std::vector<ChatMessage>& messages) const {
    return backend.complete(config, messages);
  }
};

/// Prompt asset text with surrounding whitespace removed.
std::string prompt_asset(std::string_view name);

/// Follow-up turn sent after an unusable reply.
std::vector<ChatMessage> reask_messages(std::vector<ChatMessage> messages,
                                        const std::string& reply, std::string_view reason);

/// Sends the messages and parses the reply. If parsing throws one of
/// `retry_kinds`, the agent is asked once more with the parse failure
/// explained; a second failure propagates.
template <typename Parser>
auto ask_parsed(const Agent& agent, const std::vector<ChatMessage>& messages, Parser&& parse,
                std::initializer_list<ErrorKind> retry_kinds) {
  const auto reply = agent.ask(messages);
  try {
    return parse(reply);
  } catch (const Error& e) {
    if (std::find(retry_kinds.begin(), retry_kinds.end(), e.kind()) == retry_kinds.end()) throw;
    return parse(agent.ask(reask_messages(messages, reply, e.what())));
  }
}

}  // namespace planforge
