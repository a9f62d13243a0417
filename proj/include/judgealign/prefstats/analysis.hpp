#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "judgealign/prefstats/meta.hpp"

namespace judgealign {

struct AnalysisOptions {
  BootstrapOptions bootstrap;
  PooledTest pooled_test = PooledTest::pooled_se;
};

struct JudgeFit {
  std::string judge;
  BootstrapResult fit;
};

struct MisalignmentAnalysis {
  PreferenceModel human;
  std::optional<BootstrapResult> human_bootstrap;  // only for the combined pooled test
  std::vector<JudgeFit> judges;
  std::vector<MisalignmentCell> cells;  // judge-major, rubric order within a judge
  std::vector<PooledEstimate> pooled;   // items whose judge SEs are all positive
  std::vector<std::string> notes;
};

// Bootstrap seed for one label source, so adding or filtering judges leaves
// the other judges' intervals unchanged.
inline std::uint64_t derived_seed(std::uint64_t seed, std::string_view source) {
  return std::stoull(sha256_hex(std::to_string(seed) + ":" + std::string(source)).substr(0, 16), nullptr, 16);
}

// Judge-level analysis for one modality: the human fit and, per judge,
// bootstrap intervals and misalignment flags. Judges without a single usable
// label are skipped with a note.
inline MisalignmentAnalysis fit_misalignment(const ScoreMatrix& S, const Labels& human,
                                             const std::vector<std::pair<std::string, Labels>>& judges,
                                             const AnalysisOptions& opt = {}) {
  MisalignmentAnalysis out;
  out.human = fit_preference_model(S, human, opt.bootstrap.fit, "human");
  if (opt.pooled_test == PooledTest::combined) {
    auto b = opt.bootstrap;
    b.seed = derived_seed(opt.bootstrap.seed, "human");
    out.human_bootstrap = bootstrap_ci(S, human, b, "human");
  }
  for (const auto& [name, labels] : judges) {
    if (std::none_of(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); })) {
      out.notes.push_back(name + ": no positionally consistent judgments, excluded from the fit");
      continue;
    }
    auto b = opt.bootstrap;
    b.seed = derived_seed(opt.bootstrap.seed, name);
    JudgeFit jf{name, bootstrap_ci(S, labels, b, name)};
    if (jf.fit.warning) {
      out.notes.push_back(name + ": " + std::to_string(jf.fit.dropped) + " of " + std::to_string(b.n_boot) +
                          " bootstrap replicates failed");
    }
    for (std::size_t c = 0; c < S.cols(); ++c) {
      out.cells.push_back(judge_misalignment(jf.fit.cis[c], out.human.coefficients[c], name));
    }
    out.judges.push_back(std::move(jf));
  }
  return out;
}

// Rubric-level analysis: per item, pools the judges' coefficients (bootstrap
// SDs as standard errors) and tests the pooled value against the human one.
// Items where some judge has zero bootstrap spread are skipped with a note.
inline void pool_misalignment(MisalignmentAnalysis& a, const AnalysisOptions& opt = {}) {
  a.pooled.clear();
  if (a.judges.empty()) return;
  for (std::size_t c = 0; c < a.human.items.size(); ++c) {
    std::vector<double> est, se;
    for (const auto& jf : a.judges) {
      est.push_back(jf.fit.model.coefficients[c]);
      se.push_back(jf.fit.cis[c].se);
    }
    const auto& item = a.human.items[c];
    if (std::any_of(se.begin(), se.end(), [](double s) { return !(s > 0.0); })) {
      a.notes.push_back(item + ": not pooled, a judge coefficient has zero bootstrap spread");
      continue;
    }
    if (opt.pooled_test == PooledTest::combined && !a.human_bootstrap) {
      throw PreconditionError("combined pooled test needs human bootstrap intervals");
    }
    const double se_h = a.human_bootstrap ? a.human_bootstrap->cis[c].se : 0.0;
    a.pooled.push_back(rubric_misalignment(paule_mandel(est, se), est.size(), a.human.coefficients[c],
                                           opt.pooled_test, se_h, opt.bootstrap.level, item));
  }
}

inline MisalignmentAnalysis analyze_misalignment(const ScoreMatrix& S, const Labels& human,
                                                 const std::vector<std::pair<std::string, Labels>>& judges,
                                                 const AnalysisOptions& opt = {}) {
  auto a = fit_misalignment(S, human, judges, opt);
  pool_misalignment(a, opt);
  return a;
}

inline void to_json(json& j, const JudgeFit& f) {
  j = json{{"judge", f.judge}, {"model", f.fit.model}, {"cis", f.fit.cis}, {"dropped", f.fit.dropped},
           {"warning", f.fit.warning}};
}

inline void from_json(const json& j, JudgeFit& f) {
  f.judge = j.at("judge").get<std::string>();
  f.fit.model = j.at("model").get<PreferenceModel>();
  f.fit.cis = j.at("cis").get<std::vector<CoefficientCI>>();
  f.fit.dropped = j.at("dropped").get<std::size_t>();
  f.fit.warning = j.at("warning").get<bool>();
}

inline void to_json(json& j, const MisalignmentAnalysis& a) {
  j = json{{"human", a.human}, {"judges", a.judges}, {"cells", a.cells}, {"pooled", a.pooled}, {"notes", a.notes}};
  if (a.human_bootstrap) j["human_cis"] = a.human_bootstrap->cis;
}

inline void from_json(const json& j, MisalignmentAnalysis& a) {
  a.human = j.at("human").get<PreferenceModel>();
  a.judges = j.at("judges").get<std::vector<JudgeFit>>();
  a.cells = j.at("cells").get<std::vector<MisalignmentCell>>();
  a.pooled = j.value("pooled", std::vector<PooledEstimate>{});
  a.notes = j.value("notes", std::vector<std::string>{});
  a.human_bootstrap.reset();
  if (j.contains("human_cis")) {
    BootstrapResult b;
    b.model = a.human;
    b.cis = j["human_cis"].get<std::vector<CoefficientCI>>();
    a.human_bootstrap = std::move(b);
  }
}

}  // namespace judgealign
