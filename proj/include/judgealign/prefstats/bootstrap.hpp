#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "judgealign/core/io.hpp"
#include "judgealign/core/random.hpp"
#include "judgealign/prefstats/logistic.hpp"

namespace judgealign {

struct CoefficientCI {
  std::string item;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::size_t n_boot = 0;  // replicates that produced a fit
  double se = 0.0;         // standard deviation of the replicate coefficients
};

struct BootstrapOptions {
  std::size_t n_boot = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  std::size_t workers = 1;
  double max_drop_fraction = 0.10;
  FitOptions fit;
};

struct BootstrapResult {
  PreferenceModel model;  // fit on the full data
  std::vector<CoefficientCI> cis;
  std::size_t dropped = 0;
  bool warning = false;  // more than max_drop_fraction of replicates failed
};

// Sample quantile with linear interpolation between order statistics
// (h = (n-1)p). `sorted` must be ascending and non-empty.
inline double quantile_linear(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Percentile bootstrap over rows with a present label. Replicate b draws
// from its own stream Rng(seed, b), so results do not depend on `workers`.
// Replicates whose fit throws are dropped and counted.
inline BootstrapResult bootstrap_ci(const ScoreMatrix& S, const Labels& labels, const BootstrapOptions& opt = {},
                                    std::string label_source = "human") {
  if (opt.n_boot == 0) throw InvalidConfig("n_boot must be positive");
  if (!(opt.level > 0.0 && opt.level < 1.0)) throw InvalidConfig("confidence level must be in (0, 1)");
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  design(S, labels, opt.fit.intercept, X, y);
  BootstrapResult out;
  out.model = fit_design(X, y, opt.fit);
  out.model.label_source = std::move(label_source);
  out.model.items = S.item_names;

  const Eigen::Index n = X.rows();
  const std::size_t p = S.cols();
  std::vector<std::optional<std::vector<double>>> reps(opt.n_boot);
  parallel_for(opt.n_boot, opt.workers, [&](std::size_t b) {
    Rng rng(opt.seed, b);
    Eigen::MatrixXd Xb(n, X.cols());
    Eigen::VectorXd yb(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      Xb.row(i) = X.row(k);
      yb[i] = y[k];
    }
    try {
      reps[b] = fit_design(Xb, yb, opt.fit).coefficients;
    } catch (const Error&) {
    }
  });

  std::vector<std::vector<double>> by_item(p);
  for (const auto& r : reps) {
    if (!r) {
      ++out.dropped;
      continue;
    }
    for (std::size_t j = 0; j < p; ++j) by_item[j].push_back((*r)[j]);
  }
  const std::size_t kept = opt.n_boot - out.dropped;
  out.warning = static_cast<double>(out.dropped) > opt.max_drop_fraction * static_cast<double>(opt.n_boot);
  if (kept == 0) throw SingularSystem("every bootstrap replicate failed");

  const double alpha = 1.0 - opt.level;
  for (std::size_t j = 0; j < p; ++j) {
    auto& v = by_item[j];
    std::sort(v.begin(), v.end());
    CoefficientCI ci;
    ci.item = S.item_names[j];
    ci.point = out.model.coefficients[j];
    ci.lower = quantile_linear(v, alpha / 2);
    ci.upper = quantile_linear(v, 1.0 - alpha / 2);
    ci.level = opt.level;
    ci.n_boot = kept;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(kept);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    ci.se = kept > 1 ? std::sqrt(ss / static_cast<double>(kept - 1)) : 0.0;
    out.cis.push_back(ci);
  }
  return out;
}

inline void to_json(json& j, const CoefficientCI& c) {
  j = json{{"item", c.item},   {"point", c.point},   {"lower", c.lower}, {"upper", c.upper},
           {"level", c.level}, {"n_boot", c.n_boot}, {"se", c.se}};
}

inline void from_json(const json& j, CoefficientCI& c) {
  c.item = j.at("item").get<std::string>();
  c.point = j.at("point").get<double>();
  c.lower = j.at("lower").get<double>();
  c.upper = j.at("upper").get<double>();
  c.level = j.at("level").get<double>();
  c.n_boot = j.at("n_boot").get<std::size_t>();
  c.se = j.at("se").get<double>();
}

}  // namespace judgealign
