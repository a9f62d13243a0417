#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <string>

#include "judgealign/core/io.hpp"
#include "judgealign/core/types.hpp"

namespace judgealign {

struct EndpointConfig {
  std::string base_url;     // e.g. https://api.example.com/v1
  std::string api_key_env;  // name of the env var holding the bearer token; may be empty
  int timeout_seconds = 120;
};

// One chat-completion call: a system message and a user message in, text out.
// `attempt` distinguishes retries of the same prompt; it is part of the cache
// key but never sent to the endpoint.
struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 1024;
  int attempt = 0;
};

inline json request_json(const ChatRequest& r) {
  return json{{"model", r.model},         {"system", r.system},         {"user", r.user},
              {"temperature", r.temperature}, {"max_tokens", r.max_tokens}, {"attempt", r.attempt}};
}

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns the model's text; throws TransportError on failure.
  virtual std::string complete(const ChatRequest& request) = 0;
};

// Scores a single (context, response) pair.
struct RewardRequest {
  std::string model;
  std::string context;
  std::string response;
  int attempt = 0;
};

inline json request_json(const RewardRequest& r) {
  return json{{"model", r.model}, {"context", r.context}, {"response", r.response}, {"attempt", r.attempt}};
}

class RewardClient {
 public:
  virtual ~RewardClient() = default;
  virtual double score(const RewardRequest& request) = 0;
};

// Adapts a callable; counts invocations. Thread-safe if the callable is.
class FunctionChatClient : public ChatClient {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionChatClient(Fn fn) : fn_(std::move(fn)) {}

  std::string complete(const ChatRequest& request) override {
    ++calls_;
    return fn_(request);
  }
  std::size_t calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::atomic<std::size_t> calls_{0};
};

class FunctionRewardClient : public RewardClient {
 public:
  using Fn = std::function<double(const RewardRequest&)>;
  explicit FunctionRewardClient(Fn fn) : fn_(std::move(fn)) {}

  double score(const RewardRequest& request) override {
    ++calls_;
    return fn_(request);
  }
  std::size_t calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::atomic<std::size_t> calls_{0};
};

// Content-addressed response store: <dir>/<hh>/<sha256>.json, where the hash
// covers the caller's namespace (judge name) and the full request.
class ResponseCache {
 public:
  explicit ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

  static std::string key(std::string_view ns, const json& request) {
    return sha256_hex(json{{"ns", ns}, {"request", request}}.dump());
  }

  std::optional<json> get(const std::string& key) const {
    const auto path = path_for(key);
    std::error_code ec;
    if (!fs::exists(path, ec)) return std::nullopt;
    json entry = json::parse(read_file(path), nullptr, false);
    if (entry.is_discarded() || !entry.contains("response")) return std::nullopt;
    return entry["response"];
  }

  void put(const std::string& key, std::string_view ns, const json& request, const json& response) const {
    json entry{{"ns", ns}, {"request", request}, {"response", response}};
    atomic_write_file(path_for(key), entry.dump());
  }

  const fs::path& directory() const { return dir_; }

 private:
  fs::path path_for(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".json"); }

  fs::path dir_;
};

// Serves repeated requests from the cache; only misses reach `inner`.
class CachedChatClient : public ChatClient {
 public:
  CachedChatClient(ChatClient& inner, const ResponseCache& cache, std::string ns)
      : inner_(inner), cache_(cache), ns_(std::move(ns)) {}

  std::string complete(const ChatRequest& request) override {
    const json req = request_json(request);
    const auto key = ResponseCache::key(ns_, req);
    if (auto hit = cache_.get(key); hit && hit->is_string()) {
      ++hits_;
      return hit->get<std::string>();
    }
    ++remote_calls_;
    std::string response = inner_.complete(request);
    cache_.put(key, ns_, req, response);
    return response;
  }

  std::size_t remote_calls() const { return remote_calls_.load(); }
  std::size_t hits() const { return hits_.load(); }

 private:
  ChatClient& inner_;
  const ResponseCache& cache_;
  std::string ns_;
  std::atomic<std::size_t> remote_calls_{0};
  std::atomic<std::size_t> hits_{0};
};

class CachedRewardClient : public RewardClient {
 public:
  CachedRewardClient(RewardClient& inner, const ResponseCache& cache, std::string ns)
      : inner_(inner), cache_(cache), ns_(std::move(ns)) {}

  double score(const RewardRequest& request) override {
    const json req = request_json(request);
    const auto key = ResponseCache::key(ns_, req);
    if (auto hit = cache_.get(key); hit && hit->is_number()) {
      ++hits_;
      return hit->get<double>();
    }
    ++remote_calls_;
    const double s = inner_.score(request);
    cache_.put(key, ns_, req, s);
    return s;
  }

  std::size_t remote_calls() const { return remote_calls_.load(); }
  std::size_t hits() const { return hits_.load(); }

 private:
  RewardClient& inner_;
  const ResponseCache& cache_;
  std::string ns_;
  std::atomic<std::size_t> remote_calls_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace judgealign
