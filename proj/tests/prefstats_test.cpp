#include <gtest/gtest.h>

#include <cmath>

#include "judgealign/prefstats/analysis.hpp"
#include "oracles.hpp"

namespace ja = judgealign;

namespace {

constexpr auto A = ja::Side::a;
constexpr auto B = ja::Side::b;

// Builds a score matrix from "A better" features (+1 = A better), storing
// them in the scorer encoding.
ja::ScoreMatrix matrix(const std::vector<std::vector<int>>& features) {
  std::vector<std::string> ids, items;
  for (std::size_t r = 0; r < features.size(); ++r) ids.push_back("p" + std::to_string(r));
  for (std::size_t c = 0; c < (features.empty() ? 0 : features[0].size()); ++c) items.push_back("i" + std::to_string(c));
  ja::ScoreMatrix m(ids, items);
  for (std::size_t r = 0; r < features.size(); ++r)
    for (std::size_t c = 0; c < features[r].size(); ++c) m.set(r, c, -features[r][c]);
  return m;
}

struct Dataset {
  std::vector<std::vector<int>> features;
  ja::Labels labels;
};

Dataset random_dataset(ja::Rng& rng, std::size_t n, std::size_t p, double coef_range) {
  std::vector<double> beta(p);
  for (auto& b : beta) b = (2 * rng.uniform() - 1) * coef_range;
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> x(p);
    double eta = 0;
    for (std::size_t j = 0; j < p; ++j) {
      x[j] = static_cast<int>(rng.index(3)) - 1;
      eta += beta[j] * x[j];
    }
    d.features.push_back(x);
    d.labels.push_back(rng.bernoulli(ja::sigmoid(eta)) ? A : B);
  }
  return d;
}

oracle::Rows rows_of(const Dataset& d) {
  oracle::Rows X;
  for (const auto& f : d.features) X.emplace_back(f.begin(), f.end());
  return X;
}

std::vector<double> y_of(const Dataset& d) {
  std::vector<double> y;
  for (const auto& l : d.labels) y.push_back(*l == A ? 1.0 : 0.0);
  return y;
}

}  // namespace

TEST(Logistic, BalancedRowsGiveZero) {
  const auto m = ja::fit_preference_model(matrix({{1}, {1}}), {A, B});
  EXPECT_NEAR(m.coefficients[0], 0.0, 1e-12);
  EXPECT_FALSE(m.ridge_used);
}

TEST(Logistic, ThreeToOneGivesLogThree) {
  const auto m = ja::fit_preference_model(matrix({{1}, {1}, {1}, {1}}), {A, A, A, B});
  EXPECT_NEAR(m.coefficients[0], std::log(3.0), 1e-9);
  EXPECT_TRUE(m.converged);
  EXPECT_EQ(m.n_used, 4u);
}

TEST(Logistic, ScorerEncodingIsFlipped) {
  // Stored -1 means A better; A always preferred here, so beta > 0.
  ja::ScoreMatrix s({"a", "b", "c", "d"}, {"x"});
  for (int r = 0; r < 4; ++r) s.set(r, 0, -1);
  const auto m = ja::fit_preference_model(s, {A, A, A, B});
  EXPECT_GT(m.coefficients[0], 1.0);
}

TEST(Logistic, AbsentLabelsExcludedAndErrors) {
  const auto m = ja::fit_preference_model(matrix({{1}, {1}, {1}, {1}, {-1}}), {A, A, A, B, std::nullopt});
  EXPECT_EQ(m.n_used, 4u);
  EXPECT_NEAR(m.coefficients[0], std::log(3.0), 1e-9);
  EXPECT_THROW(ja::fit_preference_model(matrix({{1}}), {std::nullopt}), ja::NoLabeledRows);
  EXPECT_THROW(ja::fit_preference_model(matrix({{1}}), {A, B}), ja::DimensionMismatch);
}

TEST(Logistic, SeparationFallsBackToRidge) {
  const auto m = ja::fit_preference_model(matrix({{1, 0}, {1, 1}, {-1, 0}, {-1, 1}, {0, 1}, {0, -1}}),
                                          {A, A, B, B, A, B});
  EXPECT_TRUE(m.ridge_used);
  for (double b : m.coefficients) EXPECT_TRUE(std::isfinite(b));
  EXPECT_GT(m.coefficients[0], 5.0);
  // An all-zero column makes the plain system singular.
  const auto z = ja::fit_preference_model(matrix({{1, 0}, {1, 0}, {-1, 0}, {1, 0}}), {A, B, B, A});
  EXPECT_TRUE(z.ridge_used);
  EXPECT_NEAR(z.coefficients[1], 0.0, 1e-12);
}

TEST(LogisticProperty, MatchesDerivativeFreeOracle) {
  ja::Rng rng(2024);
  for (int t = 0; t < 60; ++t) {
    const auto d = random_dataset(rng, 20 + rng.index(41), 1 + rng.index(3), 1.0);
    const auto m = ja::fit_preference_model(matrix(d.features), d.labels);
    const auto ref = oracle::logistic_argmax(rows_of(d), y_of(d), d.features[0].size(), m.ridge_used ? 1e-4 : 0.0);
    for (std::size_t j = 0; j < ref.size(); ++j) EXPECT_NEAR(m.coefficients[j], ref[j], 1e-4) << "dataset " << t;
  }
}

TEST(LogisticProperty, ScoreEquationsAndFiniteDifferenceGradient) {
  ja::Rng rng(99);
  for (int t = 0; t < 40; ++t) {
    const auto d = random_dataset(rng, 200, 3, 1.0);
    const auto S = matrix(d.features);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    ja::design(S, d.labels, false, X, y);
    const auto m = ja::fit_design(X, y);
    ASSERT_FALSE(m.ridge_used);
    const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(m.coefficients.data(), 3);
    EXPECT_LT(ja::log_likelihood_gradient(X, y, beta).norm(), 1e-6);

    Eigen::VectorXd b(3);
    for (int j = 0; j < 3; ++j) b[j] = 4 * rng.uniform() - 2;
    const auto g = ja::log_likelihood_gradient(X, y, b);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-5;
      Eigen::VectorXd up = b, dn = b;
      up[j] += h;
      dn[j] -= h;
      const double fd = (ja::log_likelihood(X, y, up) - ja::log_likelihood(X, y, dn)) / (2 * h);
      EXPECT_NEAR(g[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(LogisticProperty, SignSymmetries) {
  ja::Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    auto d = random_dataset(rng, 150, 3, 1.0);
    const auto base = ja::fit_preference_model(matrix(d.features), d.labels);
    if (base.ridge_used) continue;
    // Negating every feature and every label leaves the fit unchanged.
    auto neg = d;
    for (auto& f : neg.features)
      for (auto& x : f) x = -x;
    for (auto& l : neg.labels) l = ja::negate(*l);
    const auto both = ja::fit_preference_model(matrix(neg.features), neg.labels);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(both.coefficients[j], base.coefficients[j], 1e-9);
    // Negating one column negates exactly that coefficient.
    auto one = d;
    for (auto& f : one.features) f[1] = -f[1];
    const auto flipped = ja::fit_preference_model(matrix(one.features), one.labels);
    EXPECT_NEAR(flipped.coefficients[0], base.coefficients[0], 1e-9);
    EXPECT_NEAR(flipped.coefficients[1], -base.coefficients[1], 1e-9);
    EXPECT_NEAR(flipped.coefficients[2], base.coefficients[2], 1e-9);
  }
}

TEST(Logistic, InterceptModeCapturesPositionBias) {
  // No informative features; A preferred 3 times in 4.
  std::vector<std::vector<int>> f(400, {0});
  for (std::size_t i = 0; i < f.size(); ++i) f[i][0] = (i / 4) % 2 ? 1 : -1;
  ja::Labels l;
  for (std::size_t i = 0; i < f.size(); ++i) l.push_back(i % 4 == 3 ? B : A);
  ja::FitOptions opt;
  opt.intercept = true;
  const auto m = ja::fit_preference_model(matrix(f), l, opt);
  ASSERT_TRUE(m.intercept);
  EXPECT_NEAR(*m.intercept, std::log(3.0), 1e-6);
  EXPECT_EQ(m.coefficients.size(), 1u);
}

TEST(Bootstrap, QuantileInterpolation) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(ja::quantile_linear(v, 0.0), 1);
  EXPECT_DOUBLE_EQ(ja::quantile_linear(v, 0.5), 3);
  EXPECT_DOUBLE_EQ(ja::quantile_linear(v, 0.025), 1.1);
  EXPECT_DOUBLE_EQ(ja::quantile_linear(v, 1.0), 5);
  EXPECT_DOUBLE_EQ(ja::quantile_linear({7}, 0.975), 7);
}

TEST(Bootstrap, DeterministicOrderedAndWorkerIndependent) {
  ja::Rng rng(3);
  const auto d = random_dataset(rng, 120, 3, 1.0);
  const auto S = matrix(d.features);
  ja::BootstrapOptions opt;
  opt.n_boot = 200;
  opt.seed = 17;
  const auto a = ja::bootstrap_ci(S, d.labels, opt);
  const auto b = ja::bootstrap_ci(S, d.labels, opt);
  opt.workers = 4;
  const auto c = ja::bootstrap_ci(S, d.labels, opt);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(a.cis[j].lower, b.cis[j].lower);
    EXPECT_EQ(a.cis[j].upper, c.cis[j].upper);
    EXPECT_EQ(a.cis[j].se, c.cis[j].se);
    EXPECT_LE(a.cis[j].lower, a.cis[j].upper);
    EXPECT_GT(a.cis[j].se, 0.0);
    EXPECT_EQ(a.cis[j].n_boot, 200u);
  }
  EXPECT_EQ(a.dropped, 0u);
}

TEST(Bootstrap, SingleReplicateIsDegenerate) {
  ja::Rng rng(4);
  const auto d = random_dataset(rng, 80, 2, 1.0);
  const auto S = matrix(d.features);
  ja::BootstrapOptions opt;
  opt.n_boot = 1;
  opt.seed = 5;
  const auto r = ja::bootstrap_ci(S, d.labels, opt);

  // Re-draw the one replicate by hand.
  ja::Rng rep(5, 0);
  std::vector<std::vector<int>> f;
  ja::Labels l;
  for (std::size_t i = 0; i < d.features.size(); ++i) {
    const auto k = rep.index(d.features.size());
    f.push_back(d.features[k]);
    l.push_back(d.labels[k]);
  }
  const auto fit = ja::fit_preference_model(matrix(f), l);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(r.cis[j].lower, r.cis[j].upper);
    EXPECT_DOUBLE_EQ(r.cis[j].lower, fit.coefficients[j]);
  }
}

TEST(PauleMandel, Examples) {
  std::vector<double> e{0.5, 0.5, 0.5}, s{0.1, 0.1, 0.1};
  auto r = ja::paule_mandel(e, s);
  EXPECT_EQ(r.tau2, 0.0);
  EXPECT_NEAR(r.pooled, 0.5, 1e-15);
  EXPECT_NEAR(r.pooled_se, 0.1 / std::sqrt(3.0), 1e-15);

  r = ja::paule_mandel(std::vector{0.3}, std::vector{0.2});
  EXPECT_EQ(r.tau2, 0.0);
  EXPECT_EQ(r.pooled, 0.3);
  EXPECT_EQ(r.pooled_se, 0.2);

  e = {0.1, 0.5, 0.9};
  s = {0.1, 0.1, 0.1};
  r = ja::paule_mandel(e, s);
  // Equal SEs: Q = sum (x - mean)^2 / (0.01 + tau2) = 0.32 / (0.01 + tau2) = 2.
  EXPECT_NEAR(r.tau2, 0.15, 1e-12);
  EXPECT_LT(std::abs(ja::q_statistic(e, s, r.tau2) - 2.0), 1e-8);
  EXPECT_NEAR(r.tau2, oracle::paule_mandel_tau2(e, s), 1e-9);
  EXPECT_NEAR(r.pooled, 0.5, 1e-12);

  EXPECT_THROW(ja::paule_mandel(std::vector{0.1, 0.2}, std::vector{0.1, 0.0}), ja::InvalidStandardError);
  EXPECT_THROW(ja::paule_mandel(std::vector{0.1}, std::vector{-1.0}), ja::InvalidStandardError);
}

TEST(PauleMandelProperty, ResidualOracleAndConvexity) {
  ja::Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + rng.index(10);
    std::vector<double> e(k), s(k);
    for (std::size_t i = 0; i < k; ++i) {
      e[i] = 4 * rng.uniform() - 2;
      s[i] = 0.01 + rng.uniform();
    }
    const auto r = ja::paule_mandel(e, s);
    EXPECT_GE(r.tau2, 0.0);
    if (r.tau2 > 0) {
      EXPECT_LT(std::abs(ja::q_statistic(e, s, r.tau2) - (k - 1.0)), 1e-8);
    } else if (k > 1) {
      EXPECT_LE(ja::q_statistic(e, s, 0.0), k - 1.0);
    }
    EXPECT_NEAR(r.tau2, oracle::paule_mandel_tau2(e, s), 1e-6);
    EXPECT_GE(r.pooled, *std::min_element(e.begin(), e.end()) - 1e-12);
    EXPECT_LE(r.pooled, *std::max_element(e.begin(), e.end()) + 1e-12);
    EXPECT_GT(r.pooled_se, 0.0);
  }
}

TEST(Misalignment, JudgeLevel) {
  ja::CoefficientCI ci{"x", 0.4, 0.2, 0.6, 0.95, 100, 0.1};
  auto c = ja::judge_misalignment(ci, 0.1, "j");
  EXPECT_TRUE(c.flagged);
  EXPECT_NEAR(c.delta, 0.3, 1e-15);
  ci = {"x", 0.2, -0.1, 0.5, 0.95, 100, 0.1};
  EXPECT_FALSE(ja::judge_misalignment(ci, 0.0).flagged);
  EXPECT_FALSE(ja::judge_misalignment(ci, 0.5).flagged);  // bounds are inside
  ci.lower = 1.0;
  EXPECT_THROW(ja::judge_misalignment(ci, 0.0), ja::PreconditionError);
}

TEST(Misalignment, RubricLevel) {
  EXPECT_NEAR(ja::z_critical(0.95), 1.959964, 1e-6);
  auto e = ja::rubric_misalignment({0.0, 0.3, 0.1}, 3, 0.3);
  EXPECT_EQ(e.z, 0.0);
  EXPECT_FALSE(e.significant);
  e = ja::rubric_misalignment({0.0, 0.5, 0.1}, 3, 0.1);
  EXPECT_NEAR(e.z, 4.0, 1e-12);
  EXPECT_TRUE(e.significant);
  e = ja::rubric_misalignment({0.0, 0.25, 0.1}, 3, 0.1);
  EXPECT_NEAR(e.z, 1.5, 1e-12);
  EXPECT_FALSE(e.significant);
  e = ja::rubric_misalignment({0.0, 0.5, 0.1}, 3, 0.1, ja::PooledTest::combined, 0.3);
  EXPECT_NEAR(e.z, 0.4 / std::sqrt(0.1), 1e-12);
  EXPECT_FALSE(e.significant);
}

TEST(Analysis, ShapeAndDeterminism) {
  ja::Rng rng(8);
  const auto d = random_dataset(rng, 200, 3, 1.0);
  const auto S = matrix(d.features);
  auto judge = d.labels;
  for (std::size_t i = 0; i < judge.size(); i += 5) judge[i] = std::nullopt;
  ja::AnalysisOptions opt;
  opt.bootstrap.n_boot = 100;
  opt.bootstrap.seed = 1;
  const auto a = ja::analyze_misalignment(S, d.labels, {{"j1", judge}, {"j2", d.labels}}, opt);
  EXPECT_EQ(a.cells.size(), 6u);
  EXPECT_EQ(a.pooled.size(), 3u);
  EXPECT_EQ(a.judges[0].fit.model.n_used, 160u);
  const auto b = ja::analyze_misalignment(S, d.labels, {{"j2", d.labels}}, opt);
  EXPECT_EQ(b.judges[0].fit.cis[1].lower, a.judges[1].fit.cis[1].lower);
  EXPECT_EQ(ja::json(a).dump(), ja::json(ja::analyze_misalignment(S, d.labels, {{"j1", judge}, {"j2", d.labels}}, opt)).dump());
}

TEST(Analysis, JudgeWithoutLabelsIsSkippedWithANote) {
  ja::Rng rng(9);
  const auto d = random_dataset(rng, 100, 2, 1.0);
  const auto S = matrix(d.features);
  ja::AnalysisOptions opt;
  opt.bootstrap.n_boot = 50;
  const ja::Labels none(d.labels.size());
  const auto a = ja::analyze_misalignment(S, d.labels, {{"empty", none}, {"full", d.labels}}, opt);
  ASSERT_EQ(a.judges.size(), 1u);
  EXPECT_EQ(a.judges[0].judge, "full");
  EXPECT_EQ(a.cells.size(), 2u);
  ASSERT_FALSE(a.notes.empty());
  EXPECT_NE(a.notes[0].find("empty"), std::string::npos);
}
