#pragma once

#include <string>
#include <string_view>

#include "judgealign/core/io.hpp"
#include "judgealign/judging/client.hpp"

namespace judgealign {

// Text between <tag> and </tag> in a rendered prompt (first occurrence),
// with the newline padding the templates add stripped.
inline std::optional<std::string> extract_tagged(std::string_view s, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto b = s.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const auto e = s.find(close, b + open.size());
  if (e == std::string_view::npos) return std::nullopt;
  std::string_view body = s.substr(b + open.size(), e - b - open.size());
  if (!body.empty() && body.front() == '\n') body.remove_prefix(1);
  if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  return std::string(body);
}

// Deterministic offline judges. Behaviors:
//   always_first   answers [[A]] regardless of content (fully position-biased)
//   always_second  answers [[B]]
//   longer         prefers the longer response; ties go to the first slot
//   hash           prefers the response with the smaller SHA-256 (order-invariant)
class MockChatJudge : public ChatClient {
 public:
  explicit MockChatJudge(std::string behavior) : behavior_(std::move(behavior)) {
    if (behavior_ != "always_first" && behavior_ != "always_second" && behavior_ != "longer" && behavior_ != "hash") {
      throw InvalidConfig("unknown mock judge behavior '" + behavior_ + "'");
    }
  }

  std::string complete(const ChatRequest& r) override {
    ++calls_;
    bool pick_first = true;
    if (behavior_ == "always_second") {
      pick_first = false;
    } else if (behavior_ != "always_first") {
      const auto a = extract_tagged(r.user, "assistant_a_response").value_or("");
      const auto b = extract_tagged(r.user, "assistant_b_response").value_or("");
      pick_first = behavior_ == "longer" ? a.size() >= b.size() : sha256_hex(a) <= sha256_hex(b);
    }
    return std::string("Mock comparison.\n<answer>") + (pick_first ? "[[A]]" : "[[B]]") + "</answer>";
  }

  std::size_t calls() const { return calls_.load(); }

 private:
  std::string behavior_;
  std::atomic<std::size_t> calls_{0};
};

// Offline reward model. Behaviors: length (score = response length) and hash
// (score in [0,1) derived from the response text).
class MockRewardModel : public RewardClient {
 public:
  explicit MockRewardModel(std::string behavior) : behavior_(std::move(behavior)) {
    if (behavior_ != "length" && behavior_ != "hash") {
      throw InvalidConfig("unknown mock reward behavior '" + behavior_ + "'");
    }
  }

  double score(const RewardRequest& r) override {
    ++calls_;
    if (behavior_ == "length") return static_cast<double>(r.response.size());
    const auto h = sha256_hex(r.response);
    return static_cast<double>(std::stoull(h.substr(0, 12), nullptr, 16)) / static_cast<double>(1ull << 48);
  }

  std::size_t calls() const { return calls_.load(); }

 private:
  std::string behavior_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace judgealign
