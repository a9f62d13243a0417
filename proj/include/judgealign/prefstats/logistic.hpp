#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "judgealign/core/error.hpp"
#include "judgealign/core/types.hpp"
#include "judgealign/judging/judge.hpp"
#include "judgealign/rubric/types.hpp"

namespace judgealign {

struct FitOptions {
  bool intercept = false;
  double tolerance = 1e-8;  // on the largest coefficient change
  int max_iterations = 100;
  double ridge_lambda = 1e-4;
  double divergence_bound = 30.0;  // |beta| beyond this is treated as separation
};

// Per-row labels: +1 (A preferred), -1 (B preferred) or absent.
using Labels = std::vector<std::optional<Side>>;

struct PreferenceModel {
  std::string label_source;  // "human" or a judge name
  std::vector<std::string> items;
  std::vector<double> coefficients;
  std::optional<double> intercept;
  std::size_t n_used = 0;
  bool converged = false;
  bool ridge_used = false;
  int iterations = 0;
};

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
inline double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// Bernoulli log-likelihood of y in {0,1} under P(y=1) = sigmoid(X beta),
// minus (lambda/2)|beta|^2 over the first `penalized` coefficients.
inline double log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                             double lambda = 0.0, Eigen::Index penalized = -1) {
  const Eigen::VectorXd eta = X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
  if (penalized < 0) penalized = beta.size();
  return ll - 0.5 * lambda * beta.head(penalized).squaredNorm();
}

inline Eigen::VectorXd log_likelihood_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& beta, double lambda = 0.0,
                                               Eigen::Index penalized = -1) {
  Eigen::VectorXd p = X * beta;
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = sigmoid(p[i]);
  Eigen::VectorXd g = X.transpose() * (y - p);
  if (penalized < 0) penalized = beta.size();
  g.head(penalized) -= lambda * beta.head(penalized);
  return g;
}

struct IrlsResult {
  Eigen::VectorXd beta;
  bool converged = false;
  bool diverged = false;  // non-finite, unbounded or unsolvable
  int iterations = 0;
};

// Newton-Raphson (equivalently IRLS) with step halving so the penalized
// likelihood never decreases.
inline IrlsResult irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, Eigen::Index penalized,
                       const FitOptions& opt) {
  const Eigen::Index p = X.cols();
  IrlsResult r;
  r.beta = Eigen::VectorXd::Zero(p);
  double ll = log_likelihood(X, y, r.beta, lambda, penalized);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    r.iterations = it;
    Eigen::VectorXd mu = X * r.beta;
    Eigen::VectorXd w(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      mu[i] = sigmoid(mu[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    for (Eigen::Index j = 0; j < penalized; ++j) H(j, j) += lambda;
    const Eigen::VectorXd g = log_likelihood_gradient(X, y, r.beta, lambda, penalized);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      r.diverged = true;
      return r;
    }
    Eigen::VectorXd step = llt.solve(g);
    if (!step.allFinite()) {
      r.diverged = true;
      return r;
    }
    Eigen::VectorXd next = r.beta + step;
    double next_ll = log_likelihood(X, y, next, lambda, penalized);
    for (int h = 0; h < 30 && !(next_ll >= ll - 1e-12 * std::abs(ll)); ++h) {
      step *= 0.5;
      next = r.beta + step;
      next_ll = log_likelihood(X, y, next, lambda, penalized);
    }
    r.beta = next;
    ll = next_ll;
    if (!r.beta.allFinite() || r.beta.cwiseAbs().maxCoeff() > opt.divergence_bound) {
      r.diverged = true;
      return r;
    }
    if (step.cwiseAbs().maxCoeff() < opt.tolerance) {
      r.converged = true;
      return r;
    }
  }
  return r;
}

// Design matrix from a score matrix: the scorer encodes "A better" as -1, so
// columns are negated to make +1 mean "A better". Only rows with a label
// are kept; `y` is 1 where A was preferred.
inline void design(const ScoreMatrix& S, const Labels& labels, bool intercept, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  if (labels.size() != S.rows()) throw DimensionMismatch("label count differs from score matrix rows");
  std::size_t n = 0;
  for (const auto& l : labels) n += l.has_value();
  const auto p = static_cast<Eigen::Index>(S.cols() + (intercept ? 1 : 0));
  X.resize(static_cast<Eigen::Index>(n), p);
  y.resize(static_cast<Eigen::Index>(n));
  Eigen::Index row = 0;
  for (std::size_t r = 0; r < S.rows(); ++r) {
    if (!labels[r]) continue;
    for (std::size_t c = 0; c < S.cols(); ++c) X(row, static_cast<Eigen::Index>(c)) = -S.score(r, c);
    if (intercept) X(row, p - 1) = 1.0;
    y[row] = *labels[r] == Side::a ? 1.0 : 0.0;
    ++row;
  }
}

// Maximum-likelihood fit on prepared data; coefficients in column order
// (intercept last when present). Falls back to a ridge-penalized fit when
// the plain fit diverges, fails to converge or hits a singular system.
inline PreferenceModel fit_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opt = {}) {
  if (X.rows() == 0) throw NoLabeledRows("no rows with a present label");
  const Eigen::Index penalized = X.cols() - (opt.intercept ? 1 : 0);
  PreferenceModel m;
  m.n_used = static_cast<std::size_t>(X.rows());
  auto r = irls(X, y, 0.0, penalized, opt);
  if (!r.converged) {
    FitOptions ridge = opt;
    ridge.divergence_bound = std::numeric_limits<double>::infinity();
    r = irls(X, y, opt.ridge_lambda, penalized, ridge);
    m.ridge_used = true;
    if (!r.converged && (r.diverged || !r.beta.allFinite())) {
      throw SingularSystem("logistic fit failed even with ridge penalty");
    }
  }
  m.converged = r.converged;
  m.iterations = r.iterations;
  m.coefficients.assign(r.beta.data(), r.beta.data() + penalized);
  if (opt.intercept) m.intercept = r.beta[penalized];
  return m;
}

inline PreferenceModel fit_preference_model(const ScoreMatrix& S, const Labels& labels, const FitOptions& opt = {},
                                            std::string label_source = "human") {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  design(S, labels, opt.intercept, X, y);
  auto m = fit_design(X, y, opt);
  m.label_source = std::move(label_source);
  m.items = S.item_names;
  return m;
}

// Human labels for the matrix rows, joined by pair id.
inline Labels human_labels(const ScoreMatrix& S, std::span<const PreferencePair> pairs) {
  std::map<std::string, Side, std::less<>> winner;
  for (const auto& p : pairs) winner[p.id] = p.winner;
  Labels out;
  std::vector<std::string> missing;
  for (const auto& id : S.pair_ids) {
    auto it = winner.find(id);
    if (it == winner.end()) {
      missing.push_back(id);
      out.emplace_back();
    } else {
      out.emplace_back(it->second);
    }
  }
  if (!missing.empty()) throw JoinMismatch(std::move(missing));
  return out;
}

// A judge's labels: its final (positionally consistent) decision, absent
// for inconsistent or failed judgments.
inline Labels judge_labels(const ScoreMatrix& S, std::span<const JudgmentRecord> judgments) {
  std::map<std::string, std::optional<Side>, std::less<>> by_id;
  for (const auto& j : judgments) by_id[j.pair_id] = j.final_decision;
  Labels out;
  std::vector<std::string> missing;
  for (const auto& id : S.pair_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing.push_back(id);
      out.emplace_back();
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) throw JoinMismatch(std::move(missing));
  return out;
}

inline void to_json(json& j, const PreferenceModel& m) {
  j = json{{"label_source", m.label_source}, {"items", m.items},         {"coefficients", m.coefficients},
           {"n_used", m.n_used},             {"converged", m.converged}, {"ridge_used", m.ridge_used},
           {"iterations", m.iterations}};
  if (m.intercept) j["intercept"] = *m.intercept;
}

inline void from_json(const json& j, PreferenceModel& m) {
  m.label_source = j.at("label_source").get<std::string>();
  m.items = j.at("items").get<std::vector<std::string>>();
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  m.n_used = j.at("n_used").get<std::size_t>();
  m.converged = j.at("converged").get<bool>();
  m.ridge_used = j.at("ridge_used").get<bool>();
  m.iterations = j.value("iterations", 0);
  if (j.contains("intercept")) m.intercept = j["intercept"].get<double>();
}

}  // namespace judgealign
