#pragma once

#include <cmath>
#include <limits>
#include <span>

#include <boost/math/distributions/normal.hpp>

#include "judgealign/core/error.hpp"
#include "judgealign/prefstats/bootstrap.hpp"

namespace judgealign {

struct PauleMandel {
  double tau2 = 0.0;
  double pooled = 0.0;
  double pooled_se = 0.0;
};

// Generalized Q statistic at between-study variance tau2.
inline double q_statistic(std::span<const double> est, std::span<const double> se, double tau2) {
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double w = 1.0 / (se[i] * se[i] + tau2);
    sw += w;
    swx += w * est[i];
  }
  const double mean = swx / sw;
  double q = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) q += (est[i] - mean) * (est[i] - mean) / (se[i] * se[i] + tau2);
  return q;
}

// Random-effects pooling with the Paule-Mandel tau2: the root of
// Q(tau2) = k - 1, or 0 when Q(0) is already at most k - 1. Q decreases in
// tau2, so the root is bracketed by doubling and then bisected.
inline PauleMandel paule_mandel(std::span<const double> est, std::span<const double> se) {
  if (est.empty()) throw PreconditionError("paule_mandel needs at least one estimate");
  if (est.size() != se.size()) throw DimensionMismatch("estimates and standard errors differ in length");
  for (std::size_t i = 0; i < se.size(); ++i) {
    if (!(se[i] > 0.0) || !std::isfinite(se[i]) || !std::isfinite(est[i])) {
      throw InvalidStandardError("standard error " + std::to_string(i) + " must be positive and finite");
    }
  }
  const std::size_t k = est.size();
  if (k == 1) return {0.0, est[0], se[0]};

  const double target = static_cast<double>(k - 1);
  double tau2 = 0.0;
  if (q_statistic(est, se, 0.0) > target) {
    double lo = 0.0, hi = 1.0;
    for (double s : se) hi = std::max(hi, s * s);
    while (q_statistic(est, se, hi) >= target) {
      lo = hi;
      hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double q = q_statistic(est, se, mid);
      if (std::abs(q - target) <= 1e-12) {
        lo = hi = mid;
        break;
      }
      (q > target ? lo : hi) = mid;
      if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
    }
    tau2 = 0.5 * (lo + hi);
  }
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 1.0 / (se[i] * se[i] + tau2);
    sw += w;
    swx += w * est[i];
  }
  return {tau2, swx / sw, 1.0 / std::sqrt(sw)};
}

// Two-sided critical value of the standard normal at confidence `level`.
inline double z_critical(double level = 0.95) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

struct MisalignmentCell {
  std::string judge;
  std::string item;
  double beta_h = 0.0;
  double delta = 0.0;  // judge coefficient minus human coefficient
  CoefficientCI judge_ci;
  bool flagged = false;
};

// Judge-level test: flagged when the human coefficient lies outside the
// judge's confidence interval.
inline MisalignmentCell judge_misalignment(const CoefficientCI& ci, double beta_h, std::string judge = {}) {
  if (!(ci.lower <= ci.upper)) throw PreconditionError("confidence interval bounds are out of order");
  MisalignmentCell c;
  c.judge = std::move(judge);
  c.item = ci.item;
  c.beta_h = beta_h;
  c.delta = ci.point - beta_h;
  c.judge_ci = ci;
  c.flagged = beta_h < ci.lower || beta_h > ci.upper;
  return c;
}

enum class PooledTest { pooled_se, combined };

struct PooledEstimate {
  std::string item;
  double tau2 = 0.0;
  double pooled = 0.0;
  double pooled_se = 0.0;
  std::size_t k_judges = 0;
  double beta_h = 0.0;
  double z = 0.0;
  bool significant = false;
};

// Rubric-level test of the pooled judge coefficient against the human one.
// The default divides by the pooled standard error alone; `combined` adds the
// human coefficient's own standard error in quadrature.
inline PooledEstimate rubric_misalignment(const PauleMandel& pm, std::size_t k, double beta_h,
                                          PooledTest mode = PooledTest::pooled_se, double se_h = 0.0,
                                          double level = 0.95, std::string item = {}) {
  PooledEstimate e;
  e.item = std::move(item);
  e.tau2 = pm.tau2;
  e.pooled = pm.pooled;
  e.pooled_se = pm.pooled_se;
  e.k_judges = k;
  e.beta_h = beta_h;
  const double se = mode == PooledTest::combined ? std::sqrt(pm.pooled_se * pm.pooled_se + se_h * se_h) : pm.pooled_se;
  e.z = (pm.pooled - beta_h) / se;
  e.significant = std::abs(e.z) > z_critical(level);
  return e;
}

inline PooledTest parse_pooled_test(std::string_view s) {
  if (s == "pooled_se") return PooledTest::pooled_se;
  if (s == "combined") return PooledTest::combined;
  throw InvalidConfig("unknown pooled test mode '" + std::string(s) + "'");
}

inline void to_json(json& j, const MisalignmentCell& c) {
  j = json{{"judge", c.judge},     {"item", c.item},         {"beta_h", c.beta_h},
           {"delta", c.delta},     {"judge_ci", c.judge_ci}, {"flagged", c.flagged}};
}

inline void from_json(const json& j, MisalignmentCell& c) {
  c.judge = j.at("judge").get<std::string>();
  c.item = j.at("item").get<std::string>();
  c.beta_h = j.at("beta_h").get<double>();
  c.delta = j.at("delta").get<double>();
  c.judge_ci = j.at("judge_ci").get<CoefficientCI>();
  c.flagged = j.at("flagged").get<bool>();
}

inline void to_json(json& j, const PooledEstimate& e) {
  j = json{{"item", e.item},         {"tau2", e.tau2},     {"pooled", e.pooled},
           {"pooled_se", e.pooled_se}, {"k_judges", e.k_judges}, {"beta_h", e.beta_h},
           {"z", e.z},               {"significant", e.significant}};
}

inline void from_json(const json& j, PooledEstimate& e) {
  e.item = j.at("item").get<std::string>();
  e.tau2 = j.at("tau2").get<double>();
  e.pooled = j.at("pooled").get<double>();
  e.pooled_se = j.at("pooled_se").get<double>();
  e.k_judges = j.at("k_judges").get<std::size_t>();
  e.beta_h = j.at("beta_h").get<double>();
  e.z = j.at("z").get<double>();
  e.significant = j.at("significant").get<bool>();
}

}  // namespace judgealign
