#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "judgealign/core/io.hpp"
#include "judgealign/core/text.hpp"
#include "judgealign/core/types.hpp"
#include "judgealign/judging/client.hpp"
#include "judgealign/judging/template.hpp"
#include "judgealign/judging/verdict.hpp"

namespace judgealign {

enum class JudgeKind { chat_judge, reward_model, mock };

inline std::string_view to_string(JudgeKind k) {
  switch (k) {
    case JudgeKind::chat_judge: return "chat_judge";
    case JudgeKind::reward_model: return "reward_model";
    case JudgeKind::mock: return "mock";
  }
  return "mock";
}

inline JudgeKind parse_judge_kind(std::string_view s) {
  if (s == "chat_judge") return JudgeKind::chat_judge;
  if (s == "reward_model") return JudgeKind::reward_model;
  if (s == "mock") return JudgeKind::mock;
  throw InvalidConfig("unknown judge kind '" + std::string(s) + "'");
}

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct JudgeSpec {
  std::string name;
  JudgeKind kind = JudgeKind::mock;
  std::string model;
  EndpointConfig endpoint;
  std::size_t context_window = 128000;  // characters of system + query
  DecodingParams decoding;
  int max_attempts = 3;
  std::size_t max_in_flight = 4;
  json mock;  // behavior settings for kind == mock

  void validate() const {
    if (name.empty()) throw InvalidConfig("judge name must be non-empty");
    if (context_window == 0) throw InvalidConfig("judge " + name + ": context_window must be positive");
    if (max_attempts < 1) throw InvalidConfig("judge " + name + ": max_attempts must be at least 1");
  }
};

enum class Order { original, swapped };

struct RenderedPrompt {
  std::string system;
  std::string query;

  std::size_t length() const { return text::utf8_length(system) + text::utf8_length(query); }
};

// Fills the modality's judge template. The swapped order puts response_b in
// the A slot and response_a in the B slot; nothing else changes.
inline RenderedPrompt render_prompt(Modality modality, const PreferencePair& pair, Order order,
                                    const TemplateSet& templates) {
  PlaceholderValues values;
  for (const auto& [name, member] : judge_placeholders(modality)) {
    const auto& v = pair.context.*member;
    if (!v) throw MissingPlaceholder(name);
    values[name] = *v;
  }
  const bool sw = order == Order::swapped;
  values["answer_a"] = sw ? pair.response_b : pair.response_a;
  values["answer_b"] = sw ? pair.response_a : pair.response_b;
  const auto& tpl = templates.for_modality(modality);
  return {fill_placeholders(tpl.system, values), fill_placeholders(tpl.query, values)};
}

// Trims context until `measure(pair)` fits in `window` characters. The head
// of the prefix (or chat prompt) goes first, then the tail of the suffix;
// candidate responses are never touched. Returns whether anything was cut.
inline bool fit_to_window(PreferencePair& pair, std::size_t window,
                          const std::function<std::size_t(const PreferencePair&)>& measure) {
  std::size_t size = measure(pair);
  if (size <= window) return false;
  struct Cut {
    std::optional<std::string> ContextBundle::*field;
    bool from_front;
  };
  std::vector<Cut> cuts;
  if (pair.modality == Modality::chat) {
    cuts = {{&ContextBundle::prompt, true}};
  } else {
    cuts = {{&ContextBundle::prefix, true}, {&ContextBundle::suffix, false}};
  }
  for (const auto& cut : cuts) {
    auto& v = pair.context.*(cut.field);
    if (!v || v->empty()) continue;
    const std::size_t overflow = size - window;
    const std::size_t len = text::utf8_length(*v);
    const std::size_t n = std::min(len, overflow);
    v = cut.from_front ? text::drop_front_chars(*v, n) : text::drop_back_chars(*v, n);
    size = measure(pair);
    if (size <= window) break;
  }
  return true;
}

struct JudgmentRecord {
  std::string pair_id;
  std::string judge_name;
  std::optional<Side> decision_original;  // canonical frame: +1 means response_a preferred
  std::optional<Side> decision_swapped;   // canonical frame, already corrected for the swap
  bool consistent = false;
  std::optional<Side> final_decision;
  bool truncated = false;
  std::string status_original = "ok";
  std::string status_swapped = "ok";
  std::optional<double> score_a;  // reward models only
  std::optional<double> score_b;

  bool transport_failed() const { return status_original == "transport_error" || status_swapped == "transport_error"; }

  bool operator==(const JudgmentRecord&) const = default;
};

// Derives consistency and the final decision from the two canonical decisions.
inline JudgmentRecord finalize(JudgmentRecord r) {
  r.consistent = r.decision_original && r.decision_swapped && *r.decision_original == *r.decision_swapped;
  r.final_decision = r.consistent ? r.decision_original : std::nullopt;
  return r;
}

inline Side canonical_side(Position p, Order order) {
  if (order == Order::original) return p == Position::a ? Side::a : Side::b;
  return p == Position::a ? Side::b : Side::a;
}

struct OrderOutcome {
  std::optional<Side> decision;
  std::string status;
};

namespace detail {

inline OrderOutcome ask_judge(const JudgeSpec& judge, ChatClient& client, const RenderedPrompt& prompt, Order order) {
  OrderOutcome out{std::nullopt, "no_verdict"};
  for (int attempt = 0; attempt < judge.max_attempts; ++attempt) {
    ChatRequest req{judge.model, prompt.system, prompt.query, judge.decoding.temperature, judge.decoding.max_tokens,
                    attempt};
    std::string reply;
    try {
      reply = client.complete(req);
    } catch (const TransportError&) {
      out.status = "transport_error";
      continue;
    }
    const ParsedVerdict v = parse_verdict(reply);
    if (v.ok()) return {canonical_side(*v.position, order), "ok"};
    out.status = std::string(to_string(v.status));
  }
  return out;
}

}  // namespace detail

// Asks a chat judge in both presentation orders and combines the verdicts.
inline JudgmentRecord judge_pair(const JudgeSpec& judge, ChatClient& client, const PreferencePair& pair,
                                 const TemplateSet& templates = {}) {
  if (judge.kind == JudgeKind::reward_model) throw PreconditionError("judge_pair needs a chat or mock judge");
  PreferencePair view = pair;
  JudgmentRecord rec;
  rec.pair_id = pair.id;
  rec.judge_name = judge.name;
  // Both orders have the same length, so one fit serves both.
  rec.truncated = fit_to_window(view, judge.context_window, [&](const PreferencePair& p) {
    return render_prompt(p.modality, p, Order::original, templates).length();
  });
  const auto first = detail::ask_judge(judge, client, render_prompt(view.modality, view, Order::original, templates),
                                       Order::original);
  const auto second = detail::ask_judge(judge, client, render_prompt(view.modality, view, Order::swapped, templates),
                                        Order::swapped);
  rec.decision_original = first.decision;
  rec.status_original = first.status;
  rec.decision_swapped = second.decision;
  rec.status_swapped = second.status;
  return finalize(std::move(rec));
}

// Reward-model preference from two independent scalar scores: B when
// score_a < score_b, A otherwise (exact ties go to A).
inline Side reward_preference(double score_a, double score_b) { return score_a < score_b ? Side::b : Side::a; }

inline JudgmentRecord reward_judge_pair(const JudgeSpec& judge, RewardClient& client, const PreferencePair& pair) {
  if (judge.kind != JudgeKind::reward_model) throw PreconditionError("reward_judge_pair needs a reward model");
  PreferencePair view = pair;
  JudgmentRecord rec;
  rec.pair_id = pair.id;
  rec.judge_name = judge.name;
  rec.truncated = fit_to_window(view, judge.context_window, [](const PreferencePair& p) {
    return text::utf8_length(context_text(p)) +
           std::max(text::utf8_length(p.response_a), text::utf8_length(p.response_b));
  });
  const std::string ctx = context_text(view);
  auto score = [&](const std::string& response, std::string& status) -> std::optional<double> {
    status = "transport_error";
    for (int attempt = 0; attempt < judge.max_attempts; ++attempt) {
      try {
        const double s = client.score({judge.model, ctx, response, attempt});
        if (std::isfinite(s)) {
          status = "ok";
          return s;
        }
        status = "non_finite_score";
      } catch (const TransportError&) {
        status = "transport_error";
      }
    }
    return std::nullopt;
  };
  rec.score_a = score(view.response_a, rec.status_original);
  rec.score_b = score(view.response_b, rec.status_swapped);
  if (rec.score_a && rec.score_b) {
    // Scores are per-candidate, so the swapped order yields the same decision.
    rec.decision_original = reward_preference(*rec.score_a, *rec.score_b);
    rec.decision_swapped = rec.decision_original;
  }
  return finalize(std::move(rec));
}

// Judges every pair with at most `judge.max_in_flight` concurrent calls.
// Output order follows `pairs`.
inline std::vector<JudgmentRecord> judge_dataset(const JudgeSpec& judge, ChatClient* chat, RewardClient* reward,
                                                 std::span<const PreferencePair> pairs,
                                                 const TemplateSet& templates = {}) {
  std::vector<JudgmentRecord> out(pairs.size());
  parallel_for(pairs.size(), judge.max_in_flight, [&](std::size_t i) {
    if (judge.kind == JudgeKind::reward_model) {
      if (!reward) throw PreconditionError("reward model " + judge.name + " has no reward client");
      out[i] = reward_judge_pair(judge, *reward, pairs[i]);
    } else {
      if (!chat) throw PreconditionError("judge " + judge.name + " has no chat client");
      out[i] = judge_pair(judge, *chat, pairs[i], templates);
    }
  });
  return out;
}

namespace detail {
inline json side_json(const std::optional<Side>& s) { return s ? json(label(*s)) : json(nullptr); }
inline std::optional<Side> side_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return side_from_label(j.get<int>());
}
}  // namespace detail

inline void to_json(json& j, const JudgmentRecord& r) {
  j = json{{"pair_id", r.pair_id},
           {"judge", r.judge_name},
           {"decision_original", detail::side_json(r.decision_original)},
           {"decision_swapped", detail::side_json(r.decision_swapped)},
           {"consistent", r.consistent},
           {"final_decision", detail::side_json(r.final_decision)},
           {"truncated", r.truncated},
           {"status_original", r.status_original},
           {"status_swapped", r.status_swapped}};
  if (r.score_a) j["score_a"] = *r.score_a;
  if (r.score_b) j["score_b"] = *r.score_b;
}

inline void from_json(const json& j, JudgmentRecord& r) {
  r.pair_id = j.at("pair_id").get<std::string>();
  r.judge_name = j.at("judge").get<std::string>();
  r.decision_original = detail::side_from(j.at("decision_original"));
  r.decision_swapped = detail::side_from(j.at("decision_swapped"));
  r.consistent = j.at("consistent").get<bool>();
  r.final_decision = detail::side_from(j.at("final_decision"));
  r.truncated = j.value("truncated", false);
  r.status_original = j.value("status_original", "ok");
  r.status_swapped = j.value("status_swapped", "ok");
  if (j.contains("score_a")) r.score_a = j["score_a"].get<double>();
  if (j.contains("score_b")) r.score_b = j["score_b"].get<double>();
}

}  // namespace judgealign
