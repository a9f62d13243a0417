#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "judgealign/core/types.hpp"
#include "judgealign/judging/judge.hpp"

namespace judgealign {

// How overall accuracy treats the swap protocol.
//   consistent   correct iff positionally consistent and matching the human label
//                (inconsistent or invalid judgments count as wrong)
//   single_pass  correct iff the original-order decision matches the label
enum class MetricsMode { consistent, single_pass };

inline MetricsMode parse_metrics_mode(std::string_view s) {
  if (s == "consistent") return MetricsMode::consistent;
  if (s == "single_pass") return MetricsMode::single_pass;
  throw InvalidConfig("unknown metrics mode '" + std::string(s) + "'");
}

inline std::string_view to_string(MetricsMode m) { return m == MetricsMode::consistent ? "consistent" : "single_pass"; }

// Counts are exact; the fractions are derived from them.
struct AccuracySummary {
  std::size_t n_total = 0;
  std::size_t n_consistent = 0;
  std::size_t n_consistent_correct = 0;
  std::size_t n_correct = 0;  // numerator of acc under the chosen mode
  double acc = 0.0;
  std::optional<double> acc_pc;
  double consistency_rate = 0.0;
};

inline AccuracySummary summarize_counts(std::size_t total, std::size_t consistent, std::size_t consistent_correct,
                                        std::size_t correct) {
  AccuracySummary s;
  s.n_total = total;
  s.n_consistent = consistent;
  s.n_consistent_correct = consistent_correct;
  s.n_correct = correct;
  if (total > 0) {
    s.acc = static_cast<double>(correct) / static_cast<double>(total);
    s.consistency_rate = static_cast<double>(consistent) / static_cast<double>(total);
  }
  if (consistent > 0) s.acc_pc = static_cast<double>(consistent_correct) / static_cast<double>(consistent);
  return s;
}

namespace detail {

// Joins judgments to pairs one-to-one; throws JoinMismatch listing every id
// that is duplicated or lacks a partner.
inline std::vector<std::pair<const JudgmentRecord*, const PreferencePair*>> join(
    std::span<const JudgmentRecord> judgments, std::span<const PreferencePair> pairs) {
  std::unordered_map<std::string, const PreferencePair*> by_id;
  std::vector<std::string> orphans;
  for (const auto& p : pairs) {
    if (!by_id.emplace(p.id, &p).second) orphans.push_back(p.id);
  }
  std::unordered_map<std::string, int> used;
  std::vector<std::pair<const JudgmentRecord*, const PreferencePair*>> out;
  for (const auto& j : judgments) {
    auto it = by_id.find(j.pair_id);
    if (it == by_id.end() || used[j.pair_id]++ > 0) {
      orphans.push_back(j.pair_id);
      continue;
    }
    out.emplace_back(&j, it->second);
  }
  for (const auto& p : pairs) {
    if (!used.contains(p.id)) orphans.push_back(p.id);
  }
  if (!orphans.empty()) {
    std::sort(orphans.begin(), orphans.end());
    orphans.erase(std::unique(orphans.begin(), orphans.end()), orphans.end());
    throw JoinMismatch(std::move(orphans));
  }
  return out;
}

inline bool correct_under(const JudgmentRecord& j, const PreferencePair& p, MetricsMode mode) {
  if (mode == MetricsMode::single_pass) return j.decision_original && *j.decision_original == p.winner;
  return j.final_decision && *j.final_decision == p.winner;
}

}  // namespace detail

inline AccuracySummary accuracy_metrics(std::span<const JudgmentRecord> judgments,
                                        std::span<const PreferencePair> pairs,
                                        MetricsMode mode = MetricsMode::consistent) {
  std::size_t consistent = 0, consistent_correct = 0, correct = 0;
  const auto joined = detail::join(judgments, pairs);
  for (const auto& [j, p] : joined) {
    if (j->consistent) {
      ++consistent;
      if (j->final_decision && *j->final_decision == p->winner) ++consistent_correct;
    }
    if (detail::correct_under(*j, *p, mode)) ++correct;
  }
  return summarize_counts(joined.size(), consistent, consistent_correct, correct);
}

struct ContextSplit {
  std::optional<double> acc_fits;
  std::optional<double> acc_truncated;
  AccuracySummary fits;
  AccuracySummary truncated;
};

// Accuracy separately over pairs whose prompt fit the judge's context window
// and pairs that had to be truncated. An empty partition has no metric.
inline ContextSplit context_split_metrics(std::span<const JudgmentRecord> judgments,
                                          std::span<const PreferencePair> pairs,
                                          const std::map<std::string, bool>& fits,
                                          MetricsMode mode = MetricsMode::consistent) {
  const auto joined = detail::join(judgments, pairs);
  std::vector<JudgmentRecord> jf, jt;
  std::vector<PreferencePair> pf, pt;
  for (const auto& [j, p] : joined) {
    auto it = fits.find(p->id);
    if (it == fits.end()) throw JoinMismatch({p->id});
    (it->second ? jf : jt).push_back(*j);
    (it->second ? pf : pt).push_back(*p);
  }
  ContextSplit out;
  out.fits = accuracy_metrics(jf, pf, mode);
  out.truncated = accuracy_metrics(jt, pt, mode);
  if (!pf.empty()) out.acc_fits = out.fits.acc;
  if (!pt.empty()) out.acc_truncated = out.truncated.acc;
  return out;
}

// Fit flags taken from the judgments' truncation markers.
inline std::map<std::string, bool> fits_from_judgments(std::span<const JudgmentRecord> judgments) {
  std::map<std::string, bool> fits;
  for (const auto& j : judgments) fits[j.pair_id] = !j.truncated;
  return fits;
}

}  // namespace judgealign
