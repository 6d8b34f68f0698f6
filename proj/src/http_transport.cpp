#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "planforge/backend.hpp"

namespace planforge {
namespace {

// Splits "https://host:port/prefix" into the origin httplib wants and the
// path prefix that goes in front of the endpoint.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = base_url.find('/', host_start);
  if (path_start == std::string::npos) return {base_url, ""};
  auto prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResult post_json(const std::string& base_url, const std::string& path,
                       const std::string& api_key, const std::string& body) override {
    const auto [origin, prefix] = split_base_url(base_url);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    const httplib::Headers headers = {{"Authorization", "Bearer " + api_key}};
    auto response = client.Post(prefix + path, headers, body, "application/json");
    if (!response) return HttpResult{0, {}, httplib::to_string(response.error())};
    return HttpResult{response->status, response->body, {}};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_default_transport(std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(timeout);
}

}  // namespace planforge
