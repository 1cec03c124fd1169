#include <fmt/format.h>
#include <httplib.h>

#include "samalm/gateway.hpp"

namespace samalm::llm {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw GatewayError(ErrorKind::InvalidConfig, fmt::format("endpoint '{}' lacks a scheme", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  constexpr std::string_view suffix = "/chat/completions";
  if (ep.path.size() < suffix.size() || ep.path.compare(ep.path.size() - suffix.size(), suffix.size(), suffix) != 0) {
    if (ep.path.empty()) ep.path = "/v1";
    ep.path += suffix;
  }
  return ep;
}

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig config) : config_(std::move(config)), endpoint_(split_endpoint(config_.endpoint_url)) {}

  Completion complete(const Prompt& prompt) override {
    // httplib clients are not thread-safe; one per request keeps concurrent calls independent.
    httplib::Client client(endpoint_.origin);
    const auto seconds = std::chrono::duration<double>(config_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(seconds));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(seconds));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(seconds));
    if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

    const std::string body = chat_request_body(prompt, config_).dump();
    auto res = client.Post(endpoint_.path, body, "application/json");
    if (!res) {
      const httplib::Error err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
        throw GatewayError(ErrorKind::HttpTimeout,
                           fmt::format("request to {} timed out after {:.1f}s", config_.endpoint_url, config_.timeout_s));
      }
      throw GatewayError(ErrorKind::Transport, fmt::format("request to {} failed: {}", config_.endpoint_url,
                                                           httplib::to_string(err)));
    }
    if (res->status == 429) throw GatewayError(ErrorKind::RateLimited, "endpoint rate limited the request", 429);
    if (res->status < 200 || res->status >= 300) {
      throw GatewayError(ErrorKind::HttpStatus, fmt::format("endpoint returned HTTP {}", res->status), res->status);
    }

    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw GatewayError(ErrorKind::BadResponse, fmt::format("endpoint returned invalid JSON: {}", e.what()));
    }
    std::string text = chat_response_text(parsed);
    const int tokens = estimate_tokens(text);
    return {std::move(text), BackendMode::Http, 0.0, tokens, 0};
  }

  BackendMode mode() const override { return BackendMode::Http; }

 private:
  BackendConfig config_;
  Endpoint endpoint_;
};

}  // namespace

nlohmann::json chat_request_body(const Prompt& prompt, const BackendConfig& config) {
  return {{"model", config.model_name},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                                  {{"role", "user"}, {"content", prompt.user}}})},
          {"temperature", prompt.tag.is_critic() ? config.critic_temperature : config.actor_temperature},
          {"max_tokens", config.max_tokens}};
}

std::string chat_response_text(const nlohmann::json& body) {
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw GatewayError(ErrorKind::BadResponse, "choices[0].message.content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(ErrorKind::BadResponse, fmt::format("malformed chat completion: {}", e.what()));
  }
}

std::unique_ptr<Backend> make_http_backend(const BackendConfig& config) {
  return std::make_unique<HttpBackend>(config);
}

}  // namespace samalm::llm
