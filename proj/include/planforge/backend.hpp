#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace planforge {

enum class AgentRole { Evaluator, Optimizer, Analyst, Judge };

std::string_view to_string(AgentRole role);
AgentRole agent_role_from_string(std::string_view text);

struct AgentConfig {
  AgentRole role = AgentRole::Evaluator;
  std::string model_id;
  double temperature = 0.0;
  std::string base_url;  // empty: PLANFORGE_BASE_URL, then the built-in default
  int max_retries = 3;

  /// Evaluator and judge run at 0.0, the optimizer at 1.0, the analyst at 0.7.
  static AgentConfig defaults_for(AgentRole role);

  bool operator==(const AgentConfig&) const = default;
};

/// Throws InvalidValue for temperature outside [0, 2] or negative retries.
void validate(const AgentConfig& config);

void to_json(nlohmann::json& j, const AgentConfig& v);
/// Missing fields keep the role defaults.
AgentConfig agent_config_from_json(const nlohmann::json& j, AgentRole role);

enum class MessageRole { System, User, Assistant };

std::string_view to_string(MessageRole role);

struct ChatMessage {
  MessageRole role = MessageRole::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// Chat-completion transport used by every agent call. Implementations must
/// accept concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Throws EmptyResponse, NetworkError, AuthError or ScriptMiss. Messages
  /// must be non-empty and carry non-empty content (InvalidValue otherwise).
  std::string complete(const AgentConfig& config, std::span<const ChatMessage> messages);

 protected:
  virtual std::string do_complete(const AgentConfig& config,
                                  std::span<const ChatMessage> messages) = 0;
};

/// Stable key for a request: SHA-256 over the agent role and each message's
/// role and content. Temperature and model are deliberately not part of it.
std::string request_digest(AgentRole role, std::span<const ChatMessage> messages);

/// Recorded responses keyed by request digest, plus optional per-role
/// fallback replies for requests that have no entry.
class Script {
 public:
  Script() = default;

  /// Throws DuplicateEntry if the digest is already present.
  void add(std::string digest, std::string response);
  void set_fallbacks(AgentRole role, std::vector<std::string> responses);

  /// Entry for the digest, else a fallback chosen by the digest itself, so
  /// the answer never depends on call order.
  std::optional<std::string> lookup(AgentRole role, std::string_view digest) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(std::string_view digest) const;

  nlohmann::json to_json() const;
  static Script from_json_text(std::string_view text);

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::map<AgentRole, std::vector<std::string>> fallbacks_;
};

/// Throws ParseError for unreadable or malformed files, DuplicateEntry for
/// repeated digests.
Script load_script(const std::string& path);
void save_script(const Script& script, const std::string& path);

class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  const Script& script() const noexcept { return script_; }

 protected:
  std::string do_complete(const AgentConfig& config,
                          std::span<const ChatMessage> messages) override;

 private:
  Script script_;
};

/// Forwards to another backend and captures every response into a Script.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}

  Script script() const;
  /// Requests that were seen more than once with different responses; the
  /// first response is kept.
  std::size_t conflicts() const;

 protected:
  std::string do_complete(const AgentConfig& config,
                          std::span<const ChatMessage> messages) override;

 private:
  Backend& inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> recorded_;
  std::size_t conflicts_ = 0;
};

/// One HTTP exchange as seen by the retry loop. status == 0 means the request
/// never produced a response (connection failure, timeout).
struct HttpResult {
  int status = 0;
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post_json(const std::string& base_url, const std::string& path,
                               const std::string& api_key, const std::string& body) = 0;
};

/// cpp-httplib transport; supports http and https base URLs.
std::unique_ptr<HttpTransport> make_default_transport(
    std::chrono::seconds timeout = std::chrono::seconds(120));

enum class FailureClass { Transient, Auth, Permanent };

/// 0 (no response), 429 and 5xx are transient; 401/403 are auth failures;
/// every other non-2xx is permanent.
FailureClass classify_status(int status);

inline constexpr std::string_view kDefaultBaseUrl = "https://api.openai.com";
inline constexpr std::string_view kApiKeyEnv = "PLANFORGE_API_KEY";
inline constexpr std::string_view kBaseUrlEnv = "PLANFORGE_BASE_URL";

/// Request body for POST {base_url}/v1/chat/completions. Field order is fixed
/// (model, temperature, messages) so identical inputs give identical bytes.
std::string chat_request_body(const AgentConfig& config,
                              std::span<const ChatMessage> messages);

/// Live backend for completion-compatible endpoints.
class HttpBackend final : public Backend {
 public:
  struct Options {
    std::optional<std::string> api_key;   // default: PLANFORGE_API_KEY
    std::optional<std::string> base_url;  // default: PLANFORGE_BASE_URL
    std::chrono::milliseconds backoff_base{1000};
    std::uint64_t jitter_seed = 0;  // 0: seeded from std::random_device
    std::function<void(std::chrono::milliseconds)> sleep;
    std::function<void(std::string_view)> log;
  };

  explicit HttpBackend(Options options,
                       std::unique_ptr<HttpTransport> transport = make_default_transport());

  /// Delay before retry `attempt` (0-based): uniform in [0, base * 2^attempt].
  std::chrono::milliseconds backoff_delay(int attempt);

 protected:
  std::string do_complete(const AgentConfig& config,
                          std::span<const ChatMessage> messages) override;

 private:
  std::string resolve_base_url(const AgentConfig& config) const;

  Options options_;
  std::unique_ptr<HttpTransport> transport_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

/// Reads choices[0].message.content. Throws NetworkError on a malformed body
/// and EmptyResponse on empty content.
std::string extract_completion_text(std::string_view body);

}  // namespace planforge
