#pragma once

#include <cmath>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "judgealign/rubric/axes.hpp"

namespace judgealign {

inline constexpr std::size_t kScoreChunk = 5;

enum class AxisVerdict { first, second, tie };

// Reads the last <scores> block: exactly one "<n>. <name>: <A|B|TIE>" line
// for each n in 1..count. Anything else makes the reply malformed.
inline std::optional<std::vector<AxisVerdict>> parse_scores(std::string_view reply, std::size_t count) {
  constexpr std::string_view open = "<scores>";
  constexpr std::string_view close = "</scores>";
  const auto end = reply.rfind(close);
  if (end == std::string_view::npos) return std::nullopt;
  const auto begin = reply.rfind(open, end);
  if (begin == std::string_view::npos) return std::nullopt;
  const auto body = reply.substr(begin + open.size(), end - begin - open.size());

  static const std::regex line_re(R"(^(\d+)\s*[.)]\s*(.*?)\s*:\s*(A|B|TIE)\s*$)", std::regex::icase);
  std::vector<std::optional<AxisVerdict>> got(count);
  for (const auto& raw : text::split_lines(text::normalize_newlines(body))) {
    const std::string line(text::trim(raw));
    if (line.empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) return std::nullopt;
    const unsigned long idx = std::stoul(m[1].str());
    if (idx < 1 || idx > count || got[idx - 1]) return std::nullopt;
    const auto tok = text::to_lower(m[3].str());
    got[idx - 1] = tok == "a" ? AxisVerdict::first : tok == "b" ? AxisVerdict::second : AxisVerdict::tie;
  }
  std::vector<AxisVerdict> out;
  for (const auto& g : got) {
    if (!g) return std::nullopt;
    out.push_back(*g);
  }
  return out;
}

// Score in the canonical frame (-1: response_a better) for a verdict given
// in the presentation order.
inline int canonical_score(AxisVerdict v, Order order) {
  if (v == AxisVerdict::tie) return 0;
  const int s = v == AxisVerdict::first ? -1 : 1;
  return order == Order::original ? s : -s;
}

struct ItemScore {
  int score = 0;
  bool masked = false;

  bool operator==(const ItemScore&) const = default;
};

inline RenderedPrompt render_scorer_prompt(const PreferencePair& pair, std::span<const RubricItem> chunk, Order order,
                                           const PromptTemplate& tpl) {
  std::string axes, lines;
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const auto n = std::to_string(i + 1) + ". ";
    axes += n + chunk[i].name + ": High → " + chunk[i].high + " | Low → " + chunk[i].low;
    lines += n + chunk[i].name + ": <A|B|TIE>";
    if (i + 1 < chunk.size()) {
      axes += "\n";
      lines += "\n";
    }
  }
  const bool sw = order == Order::swapped;
  PlaceholderValues values{{"context", context_text(pair)},
                           {"answer_a", sw ? pair.response_b : pair.response_a},
                           {"answer_b", sw ? pair.response_a : pair.response_b},
                           {"axes", axes},
                           {"answer_lines", lines}};
  return {fill_placeholders(tpl.system, values), fill_placeholders(tpl.query, values)};
}

namespace detail {

inline std::optional<std::vector<int>> score_one_order(const JudgeSpec& scorer, ChatClient& client,
                                                       const PreferencePair& pair, std::span<const RubricItem> chunk,
                                                       Order order, const PromptTemplate& tpl) {
  const auto prompt = render_scorer_prompt(pair, chunk, order, tpl);
  for (int attempt = 0; attempt < scorer.max_attempts; ++attempt) {
    std::string reply;
    try {
      reply = client.complete(
          {scorer.model, prompt.system, prompt.query, scorer.decoding.temperature, scorer.decoding.max_tokens, attempt});
    } catch (const TransportError&) {
      continue;
    }
    if (auto v = parse_scores(reply, chunk.size())) {
      std::vector<int> out;
      for (auto x : *v) out.push_back(canonical_score(x, order));
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Scores up to five items in both presentation orders. An item keeps its
// score only when both orders agree in the canonical frame; disagreement or
// an order that never produced a well-formed reply gives a masked 0.
inline std::vector<ItemScore> score_pair(const JudgeSpec& scorer, ChatClient& client, const PreferencePair& pair,
                                         std::span<const RubricItem> chunk, const RubricTemplates& templates = {}) {
  if (chunk.empty() || chunk.size() > kScoreChunk) {
    throw PreconditionError("score_pair takes 1 to 5 items, got " + std::to_string(chunk.size()));
  }
  PreferencePair view = pair;
  fit_to_window(view, scorer.context_window, [&](const PreferencePair& p) {
    return render_scorer_prompt(p, chunk, Order::original, templates.scorer).length();
  });
  const auto first = detail::score_one_order(scorer, client, view, chunk, Order::original, templates.scorer);
  const auto second = detail::score_one_order(scorer, client, view, chunk, Order::swapped, templates.scorer);
  std::vector<ItemScore> out(chunk.size(), ItemScore{0, true});
  if (!first || !second) return out;
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    if ((*first)[i] == (*second)[i]) out[i] = {(*first)[i], false};
  }
  return out;
}

// Scores every pair against every item, in rubric-order chunks of five.
inline ScoreMatrix build_feature_matrix(std::span<const PreferencePair> pairs, const Rubric& rubric,
                                        const JudgeSpec& scorer, ChatClient& client,
                                        const RubricTemplates& templates = {}) {
  if (rubric.items.empty()) throw EmptyRubric("rubric has no items");
  if (pairs.empty()) throw EmptyDataset("no pairs to score");
  std::vector<std::string> ids;
  for (const auto& p : pairs) ids.push_back(p.id);
  ScoreMatrix m(std::move(ids), rubric.names());
  const std::span<const RubricItem> items(rubric.items);
  parallel_for(pairs.size(), scorer.max_in_flight, [&](std::size_t r) {
    for (std::size_t c = 0; c < items.size(); c += kScoreChunk) {
      const auto chunk = items.subspan(c, std::min(kScoreChunk, items.size() - c));
      const auto scores = score_pair(scorer, client, pairs[r], chunk, templates);
      for (std::size_t k = 0; k < scores.size(); ++k) m.set(r, c + k, scores[k].score, scores[k].masked);
    }
  });
  return m;
}

// Pearson correlation of two scoring runs over all entries. When either run
// is constant the correlation is 1 for identical runs and absent otherwise.
inline std::optional<double> scorer_consistency(const ScoreMatrix& a, const ScoreMatrix& b) {
  if (a.pair_ids != b.pair_ids || a.item_names != b.item_names || a.scores.size() != b.scores.size()) {
    throw DimensionMismatch("scoring runs differ in pairs or items");
  }
  const std::size_t n = a.scores.size();
  if (n == 0) return std::nullopt;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.scores[i];
    mb += b.scores[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.scores[i] - ma, y = b.scores[i] - mb;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  if (saa == 0.0 || sbb == 0.0) {
    if (a.scores == b.scores) return 1.0;
    return std::nullopt;
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace judgealign
