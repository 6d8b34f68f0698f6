#include "planforge/agent.hpp"

#include "planforge/assets.hpp"
#include "planforge/util.hpp"

namespace planforge {

std::string prompt_asset(std::string_view name) {
  return std::string(trim(bundled_asset("prompts/" + std::string(name) + ".txt")));
}

std::vector<ChatMessage> reask_messages(std::vector<ChatMessage> messages,
                                        const std::string& reply, std::string_view reason) {
  messages.push_back({MessageRole::Assistant, reply});
  messages.push_back(
      {MessageRole::User, render_template(prompt_asset("reask"), {{"reason", reason}})});
  return messages;
}

}  // namespace planforge
