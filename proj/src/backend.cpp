#include "planforge/backend.hpp"

#include <cstdlib>
#include <thread>

#include <fmt/format.h>

#include "planforge/error.hpp"
#include "planforge/util.hpp"

namespace planforge {

using nlohmann::json;

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::Evaluator: return "evaluator";
    case AgentRole::Optimizer: return "optimizer";
    case AgentRole::Analyst: return "analyst";
    case AgentRole::Judge: return "judge";
  }
  return "evaluator";
}

AgentRole agent_role_from_string(std::string_view text) {
  if (text == "evaluator") return AgentRole::Evaluator;
  if (text == "optimizer") return AgentRole::Optimizer;
  if (text == "analyst") return AgentRole::Analyst;
  if (text == "judge") return AgentRole::Judge;
  throw Error(ErrorKind::ParseError, fmt::format("unknown agent role '{}'", text));
}

AgentConfig AgentConfig::defaults_for(AgentRole role) {
  AgentConfig config;
  config.role = role;
  switch (role) {
    case AgentRole::Evaluator:
      config.model_id = "Meta-Llama-3-70B-Instruct";
      config.temperature = 0.0;
      break;
    case AgentRole::Optimizer:
      config.model_id = "gpt-4";
      config.temperature = 1.0;
      break;
    case AgentRole::Analyst:
      config.model_id = "gpt-4";
      config.temperature = 0.7;
      break;
    case AgentRole::Judge:
      config.model_id = "gpt-4";
      config.temperature = 0.0;
      break;
  }
  return config;
}

void validate(const AgentConfig& config) {
  if (!(config.temperature >= 0.0 && config.temperature <= 2.0)) {
    throw Error(ErrorKind::InvalidValue,
                fmt::format("{} temperature {} outside [0, 2]", to_string(config.role),
                            config.temperature));
  }
  if (config.max_retries < 0) {
    throw Error(ErrorKind::InvalidValue,
                fmt::format("{} max_retries must be >= 0", to_string(config.role)));
  }
}

void to_json(json& j, const AgentConfig& v) {
  j = json{{"role", to_string(v.role)},
           {"model_id", v.model_id},
           {"temperature", v.temperature},
           {"base_url", v.base_url},
           {"max_retries", v.max_retries}};
}

AgentConfig agent_config_from_json(const json& j, AgentRole role) {
  auto config = AgentConfig::defaults_for(role);
  try {
    if (j.contains("role") && agent_role_from_string(j.at("role").get<std::string>()) != role) {
      throw Error(ErrorKind::ParseError,
                  fmt::format("agent config for '{}' names a different role", to_string(role)));
    }
    config.model_id = j.value("model_id", config.model_id);
    config.temperature = j.value("temperature", config.temperature);
    config.base_url = j.value("base_url", config.base_url);
    config.max_retries = j.value("max_retries", config.max_retries);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("malformed agent config: {}", e.what()));
  }
  validate(config);
  return config;
}

std::string_view to_string(MessageRole role) {
  switch (role) {
    case MessageRole::System: return "system";
    case MessageRole::User: return "user";
    case MessageRole::Assistant: return "assistant";
  }
  return "user";
}

std::string Backend::complete(const AgentConfig& config, std::span<const ChatMessage> messages) {
  if (messages.empty()) throw Error(ErrorKind::InvalidValue, "no messages to send");
  for (const auto& message : messages) {
    if (message.content.empty()) throw Error(ErrorKind::InvalidValue, "message content is empty");
  }
  auto text = do_complete(config, messages);
  if (trim(text).empty()) {
    throw Error(ErrorKind::EmptyResponse,
                fmt::format("{} agent returned an empty response", to_string(config.role)));
  }
  return text;
}

std::string request_digest(AgentRole role, std::span<const ChatMessage> messages) {
  // Length-prefixed fields keep the encoding unambiguous.
  std::string canonical = fmt::format("planforge-request-v1\nrole:{}\n", to_string(role));
  for (const auto& message : messages) {
    canonical += fmt::format("{}:{}:", to_string(message.role), message.content.size());
    canonical += message.content;
    canonical += '\n';
  }
  return sha256_hex(canonical);
}

void Script::add(std::string digest, std::string response) {
  if (entries_.contains(digest)) {
    throw Error(ErrorKind::DuplicateEntry, fmt::format("digest {} appears twice", digest));
  }
  entries_.emplace(std::move(digest), std::move(response));
}

void Script::set_fallbacks(AgentRole role, std::vector<std::string> responses) {
  if (responses.empty()) {
    fallbacks_.erase(role);
  } else {
    fallbacks_[role] = std::move(responses);
  }
}

bool Script::contains(std::string_view digest) const { return entries_.find(digest) != entries_.end(); }

std::optional<std::string> Script::lookup(AgentRole role, std::string_view digest) const {
  if (const auto it = entries_.find(digest); it != entries_.end()) return it->second;
  const auto fb = fallbacks_.find(role);
  if (fb == fallbacks_.end()) return std::nullopt;
  std::uint64_t selector = 0;
  for (const char c : digest.substr(0, 15)) {
    selector = selector * 16 + static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
  }
  return fb->second[selector % fb->second.size()];
}

json Script::to_json() const {
  json entries = json::object();
  for (const auto& [digest, response] : entries_) entries[digest] = response;
  json fallbacks = json::object();
  for (const auto& [role, responses] : fallbacks_) fallbacks[std::string(to_string(role))] = responses;
  return json{{"entries", entries}, {"fallbacks", fallbacks}};
}

Script Script::from_json_text(std::string_view text) {
  if (trim(text).empty()) throw Error(ErrorKind::ParseError, "script is empty");

  // nlohmann keeps the last of repeated keys, so duplicates are caught while
  // parsing.
  std::vector<std::vector<std::string>> keys_per_object;
  std::string duplicate;
  auto on_event = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start: keys_per_object.emplace_back(); break;
      case json::parse_event_t::object_end: keys_per_object.pop_back(); break;
      case json::parse_event_t::key: {
        auto& seen = keys_per_object.back();
        const auto key = parsed.get<std::string>();
        if (std::find(seen.begin(), seen.end(), key) != seen.end() && duplicate.empty()) {
          duplicate = key;
        }
        seen.push_back(key);
        break;
      }
      default: break;
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), on_event);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("script is not valid JSON: {}", e.what()));
  }
  if (!duplicate.empty()) {
    throw Error(ErrorKind::DuplicateEntry, fmt::format("key {} appears twice", duplicate));
  }
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "script must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "entries" && key != "fallbacks" && key != "description") {
      throw Error(ErrorKind::ParseError, fmt::format("unknown script field '{}'", key));
    }
  }

  Script script;
  if (doc.contains("entries")) {
    const auto& entries = doc.at("entries");
    if (!entries.is_object()) throw Error(ErrorKind::ParseError, "'entries' must be an object");
    for (const auto& [digest, response] : entries.items()) {
      if (!response.is_string()) {
        throw Error(ErrorKind::ParseError, fmt::format("entry {} is not a string", digest));
      }
      script.add(digest, response.get<std::string>());
    }
  }
  if (doc.contains("fallbacks")) {
    const auto& fallbacks = doc.at("fallbacks");
    if (!fallbacks.is_object()) throw Error(ErrorKind::ParseError, "'fallbacks' must be an object");
    for (const auto& [role, responses] : fallbacks.items()) {
      if (!responses.is_array() ||
          !std::all_of(responses.begin(), responses.end(),
                       [](const json& r) { return r.is_string(); })) {
        throw Error(ErrorKind::ParseError,
                    fmt::format("fallbacks for '{}' must be an array of strings", role));
      }
      script.set_fallbacks(agent_role_from_string(role), responses.get<std::vector<std::string>>());
    }
  }
  return script;
}

Script load_script(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return Script::from_json_text(text);
}

void save_script(const Script& script, const std::string& path) {
  write_file(path, script.to_json().dump(2) + "\n");
}

std::string ScriptedBackend::do_complete(const AgentConfig& config,
                                         std::span<const ChatMessage> messages) {
  const auto digest = request_digest(config.role, messages);
  if (auto response = script_.lookup(config.role, digest)) return *response;
  throw Error(ErrorKind::ScriptMiss,
              fmt::format("no scripted {} response for digest {}", to_string(config.role), digest));
}

std::string RecordingBackend::do_complete(const AgentConfig& config,
                                          std::span<const ChatMessage> messages) {
  auto response = inner_.complete(config, messages);
  const auto digest = request_digest(config.role, messages);
  std::lock_guard lock(mutex_);
  const auto [it, inserted] = recorded_.emplace(digest, response);
  if (!inserted && it->second != response) ++conflicts_;
  return response;
}

Script RecordingBackend::script() const {
  std::lock_guard lock(mutex_);
  Script script;
  for (const auto& [digest, response] : recorded_) script.add(digest, response);
  return script;
}

std::size_t RecordingBackend::conflicts() const {
  std::lock_guard lock(mutex_);
  return conflicts_;
}

FailureClass classify_status(int status) {
  if (status == 0 || status == 429 || status >= 500) return FailureClass::Transient;
  if (status == 401 || status == 403) return FailureClass::Auth;
  return FailureClass::Permanent;
}

std::string chat_request_body(const AgentConfig& config, std::span<const ChatMessage> messages) {
  nlohmann::ordered_json body;
  body["model"] = config.model_id;
  body["temperature"] = config.temperature;
  auto& list = body["messages"] = nlohmann::ordered_json::array();
  for (const auto& message : messages) {
    nlohmann::ordered_json entry;
    entry["role"] = to_string(message.role);
    entry["content"] = message.content;
    list.push_back(std::move(entry));
  }
  return body.dump();
}

std::string extract_completion_text(std::string_view body) {
  std::string content;
  try {
    const auto doc = json::parse(body);
    const auto& choices = doc.at("choices");
    if (!choices.is_array() || choices.empty()) {
      throw Error(ErrorKind::EmptyResponse, "response has no choices");
    }
    const auto& text = choices.at(0).at("message").at("content");
    if (text.is_null()) throw Error(ErrorKind::EmptyResponse, "response content is null");
    content = text.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::NetworkError, fmt::format("malformed completion response: {}", e.what()));
  }
  if (trim(content).empty()) throw Error(ErrorKind::EmptyResponse, "response content is empty");
  return content;
}

namespace {

std::optional<std::string> env(std::string_view name) {
  const char* value = std::getenv(std::string(name).c_str());
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

}  // namespace

HttpBackend::HttpBackend(Options options, std::unique_ptr<HttpTransport> transport)
    : options_(std::move(options)), transport_(std::move(transport)) {
  if (!options_.api_key) options_.api_key = env(kApiKeyEnv);
  if (!options_.base_url) options_.base_url = env(kBaseUrlEnv);
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  std::uint64_t seed = options_.jitter_seed;
  if (seed == 0) seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();
  rng_.seed(seed);
}

std::chrono::milliseconds HttpBackend::backoff_delay(int attempt) {
  const auto cap = options_.backoff_base.count() * (std::int64_t{1} << std::min(attempt, 30));
  std::lock_guard lock(rng_mutex_);
  std::uniform_int_distribution<std::int64_t> jitter(0, cap);
  return std::chrono::milliseconds(jitter(rng_));
}

std::string HttpBackend::resolve_base_url(const AgentConfig& config) const {
  if (!config.base_url.empty()) return config.base_url;
  if (options_.base_url) return *options_.base_url;
  return std::string(kDefaultBaseUrl);
}

std::string HttpBackend::do_complete(const AgentConfig& config,
                                     std::span<const ChatMessage> messages) {
  if (!options_.api_key) {
    throw Error(ErrorKind::AuthError, fmt::format("{} is not set", kApiKeyEnv));
  }
  const auto base_url = resolve_base_url(config);
  const auto body = chat_request_body(config, messages);
  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) options_.sleep(backoff_delay(attempt - 1));
    const auto result = transport_->post_json(base_url, "/v1/chat/completions", *options_.api_key, body);
    if (result.status >= 200 && result.status < 300) {
      if (options_.log) {
        try {
          const auto doc = json::parse(result.body);
          if (doc.contains("usage")) {
            options_.log(fmt::format("{} usage: {}", to_string(config.role), doc.at("usage").dump()));
          }
        } catch (const json::exception&) {
        }
      }
      return extract_completion_text(result.body);
    }
    last_error = result.status == 0 ? result.error
                                    : fmt::format("HTTP {}: {}", result.status, result.body);
    switch (classify_status(result.status)) {
      case FailureClass::Auth: throw Error(ErrorKind::AuthError, last_error);
      case FailureClass::Permanent: throw Error(ErrorKind::NetworkError, last_error);
      case FailureClass::Transient:
        if (options_.log) {
          options_.log(fmt::format("{} attempt {} failed: {}", to_string(config.role), attempt + 1,
                                   last_error));
        }
        break;
    }
  }
  throw Error(ErrorKind::NetworkError,
              fmt::format("giving up after {} attempts: {}", config.max_retries + 1, last_error));
}

}  // namespace planforge
