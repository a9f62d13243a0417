#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <cstdlib>
#include <string>

#include "judgealign/judging/client.hpp"

namespace judgealign {

namespace detail {

// Splits "scheme://host[:port]/path" into the origin and the path prefix.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidConfig("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

inline httplib::Headers auth_headers(const EndpointConfig& cfg) {
  httplib::Headers h;
  if (!cfg.api_key_env.empty()) {
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (!key || !*key) throw TransportError("credential env var " + cfg.api_key_env + " is not set");
    h.emplace("Authorization", std::string("Bearer ") + key);
  }
  return h;
}

inline json post_json(const EndpointConfig& cfg, const std::string& suffix, const json& body) {
  const auto [origin, prefix] = split_url(cfg.base_url);
  httplib::Client cli(origin);
  cli.set_connection_timeout(cfg.timeout_seconds, 0);
  cli.set_read_timeout(cfg.timeout_seconds, 0);
  cli.set_write_timeout(cfg.timeout_seconds, 0);
  auto res = cli.Post(prefix + suffix, auth_headers(cfg), body.dump(), "application/json");
  if (!res) throw TransportError("request to " + cfg.base_url + suffix + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + cfg.base_url + suffix);
  }
  json out = json::parse(res->body, nullptr, false);
  if (out.is_discarded()) throw TransportError("non-JSON response from " + cfg.base_url + suffix);
  return out;
}

}  // namespace detail

// Generic chat-completion contract:
//   POST {base_url}/chat/completions
//   {"model", "messages": [{"role":"system"},{"role":"user"}], "temperature", "max_tokens"}
//   -> {"choices": [{"message": {"content": "..."}}]}
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {}

  std::string complete(const ChatRequest& r) override {
    json messages = json::array();
    if (!r.system.empty()) messages.push_back({{"role", "system"}, {"content", r.system}});
    messages.push_back({{"role", "user"}, {"content", r.user}});
    const json body{{"model", r.model},
                    {"messages", messages},
                    {"temperature", r.temperature},
                    {"max_tokens", r.max_tokens}};
    const json out = detail::post_json(cfg_, "/chat/completions", body);
    try {
      return out.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw TransportError("chat response lacks choices[0].message.content");
    }
  }

 private:
  EndpointConfig cfg_;
};

// Generic scoring contract:
//   POST {base_url}/score  {"model", "context", "response"} -> {"score": number}
class HttpRewardClient : public RewardClient {
 public:
  explicit HttpRewardClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {}

  double score(const RewardRequest& r) override {
    const json body{{"model", r.model}, {"context", r.context}, {"response", r.response}};
    const json out = detail::post_json(cfg_, "/score", body);
    if (!out.contains("score") || !out["score"].is_number()) throw TransportError("score response lacks 'score'");
    return out["score"].get<double>();
  }

 private:
  EndpointConfig cfg_;
};

}  // namespace judgealign
