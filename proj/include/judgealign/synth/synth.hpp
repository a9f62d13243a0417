#pragma once

#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "judgealign/core/random.hpp"
#include "judgealign/dataset/normalize.hpp"
#include "judgealign/judging/judge.hpp"
#include "judgealign/judging/mock.hpp"
#include "judgealign/prefstats/logistic.hpp"
#include "judgealign/rubric/axes.hpp"

namespace judgealign {

struct SynthJudge {
  std::string name;
  std::vector<double> beta;
  double position_bias_rate = 0.0;
};

// How judge labels relate to human labels for the same pair.
//   shared       one uniform draw u per pair; each source prefers A iff
//                u < sigmoid(beta . x), so sources differ only where their
//                planted models differ
//   independent  a fresh draw per source
enum class LabelCoupling { shared, independent };

struct SynthConfig {
  Modality modality = Modality::edit;
  std::size_t n_pairs = 200;
  std::size_t n_items = 3;
  std::vector<double> beta_human;
  std::vector<SynthJudge> judges;
  double neutral_rate = 0.2;
  std::uint64_t seed = 0;
  LabelCoupling coupling = LabelCoupling::shared;
  std::vector<std::string> item_names;  // default "Planted item <k>"

  void validate() const {
    if (n_pairs == 0) throw InvalidConfig("n_pairs must be at least 1");
    if (n_items == 0) throw InvalidConfig("n_items must be at least 1");
    if (beta_human.size() != n_items) throw InvalidConfig("beta_human must have n_items entries");
    if (!(neutral_rate >= 0.0 && neutral_rate <= 1.0)) throw InvalidConfig("neutral_rate must be in [0, 1]");
    if (!item_names.empty() && item_names.size() != n_items) throw InvalidConfig("item_names must have n_items entries");
    std::set<std::string> names;
    for (const auto& j : judges) {
      if (j.name.empty() || !names.insert(j.name).second) throw InvalidConfig("judge names must be unique and non-empty");
      if (j.beta.size() != n_items) throw InvalidConfig("judge " + j.name + ": beta must have n_items entries");
      if (!(j.position_bias_rate >= 0.0 && j.position_bias_rate <= 1.0)) {
        throw InvalidConfig("judge " + j.name + ": position_bias_rate must be in [0, 1]");
      }
    }
  }

  std::string item_name(std::size_t k) const {
    return item_names.empty() ? "Planted item " + std::to_string(k + 1) : item_names[k];
  }
};

struct PlantedJudgeLabels {
  std::vector<Side> preferred;  // what the judge prefers when it is consistent
  std::vector<bool> biased;     // answers the first slot in both orders
};

struct SyntheticStudy {
  SynthConfig config;
  Rubric rubric;
  std::vector<PreferencePair> pairs;
  ScoreMatrix features;  // scorer encoding: -1 when response_a is better
  std::map<std::string, PlantedJudgeLabels> planted;
  std::map<std::string, std::vector<JudgmentRecord>> judgments;

  Labels human() const {
    Labels out;
    for (const auto& p : pairs) out.emplace_back(p.winner);
    return out;
  }
};

namespace detail {

inline std::string synth_response(Modality m, const std::string& id, char side) {
  const std::string mark = "synth-" + id + "-" + side;
  switch (m) {
    case Modality::completion: return "    return candidate_" + std::string(1, side) + "()  # " + mark;
    case Modality::chat:
      return "Here is a version:\n```python\ndef solve():\n    return \"" + mark + "\"\n```";
    case Modality::edit: return "value = compute(\"" + mark + "\")";
  }
  return mark;
}

inline ContextBundle synth_context(Modality m, const std::string& id) {
  ContextBundle c;
  switch (m) {
    case Modality::completion:
      c.prefix = "# synthetic pair " + id + "\ndef solve():\n";
      c.suffix = "\n\nprint(solve())\n";
      break;
    case Modality::chat:
      c.prompt = "Fix the solve function for synthetic case " + id + ".";
      break;
    case Modality::edit:
      c.prefix = "# synthetic pair " + id + "\n";
      c.suffix = "\nprint(value)\n";
      c.code_to_edit = "value = compute()";
      c.instruction = "Update the call for case " + id + ".";
      break;
  }
  return c;
}

}  // namespace detail

// Draws a study from planted logistic preference models. Each pair uses its
// own stream Rng(seed, index). Features are 0 with probability neutral_rate
// and otherwise +-1 with equal odds. Completion studies store every pair
// with the accepted candidate second (winner B), negating that row's
// features and labels when needed, since raw completion logs only record
// accepted-second pairs.
inline SyntheticStudy generate_synthetic_study(const SynthConfig& cfg) {
  cfg.validate();
  SyntheticStudy s;
  s.config = cfg;
  s.rubric.modality = cfg.modality;
  for (std::size_t k = 0; k < cfg.n_items; ++k) {
    s.rubric.items.push_back({cfg.item_name(k), "Response A exhibits " + cfg.item_name(k) + " more strongly",
                              "Response A exhibits " + cfg.item_name(k) + " less strongly", Origin::llm});
  }
  s.rubric.provenance = json{{"synthetic", true}, {"seed", cfg.seed}};

  std::vector<std::string> ids;
  for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%06zu", i);
    ids.emplace_back(buf);
  }
  s.features = ScoreMatrix(ids, s.rubric.names());
  for (const auto& j : cfg.judges) s.planted[j.name];

  for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
    Rng rng(cfg.seed, i);
    std::vector<int> x(cfg.n_items);
    for (auto& v : x) {
      const bool neutral = rng.uniform() < cfg.neutral_rate;
      const bool plus = rng.bernoulli(0.5);
      v = neutral ? 0 : plus ? 1 : -1;
    }
    auto prefers_a = [&](const std::vector<double>& beta, double u) {
      double eta = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) eta += beta[k] * x[k];
      return u < sigmoid(eta);
    };
    const double u = rng.uniform();
    Side human = prefers_a(cfg.beta_human, u) ? Side::a : Side::b;
    std::vector<std::pair<Side, bool>> judge_draws;
    for (const auto& j : cfg.judges) {
      const double uj = cfg.coupling == LabelCoupling::shared ? u : rng.uniform();
      const bool biased = rng.uniform() < j.position_bias_rate;
      judge_draws.emplace_back(prefers_a(j.beta, uj) ? Side::a : Side::b, biased);
    }
    const bool flip = cfg.modality == Modality::completion && human == Side::a;
    if (flip) {
      for (auto& v : x) v = -v;
      human = negate(human);
      for (auto& [side, _] : judge_draws) side = negate(side);
    }

    PreferencePair p;
    p.id = ids[i];
    p.modality = cfg.modality;
    p.context = detail::synth_context(cfg.modality, p.id);
    p.response_a = detail::synth_response(cfg.modality, p.id, 'a');
    p.response_b = detail::synth_response(cfg.modality, p.id, 'b');
    p.winner = human;
    s.pairs.push_back(std::move(p));
    for (std::size_t k = 0; k < cfg.n_items; ++k) s.features.set(i, k, -x[k]);

    for (std::size_t jx = 0; jx < cfg.judges.size(); ++jx) {
      const auto& [side, biased] = judge_draws[jx];
      auto& pl = s.planted[cfg.judges[jx].name];
      pl.preferred.push_back(side);
      pl.biased.push_back(biased);
      JudgmentRecord r;
      r.pair_id = ids[i];
      r.judge_name = cfg.judges[jx].name;
      if (biased) {
        r.decision_original = canonical_side(Position::a, Order::original);
        r.decision_swapped = canonical_side(Position::a, Order::swapped);
      } else {
        r.decision_original = side;
        r.decision_swapped = side;
      }
      s.judgments[r.judge_name].push_back(finalize(std::move(r)));
    }
  }
  return s;
}

// ---- serialization --------------------------------------------------------

inline void to_json(json& j, const SynthJudge& s) {
  j = json{{"name", s.name}, {"beta", s.beta}, {"position_bias_rate", s.position_bias_rate}};
}

inline void from_json(const json& j, SynthJudge& s) {
  s.name = j.at("name").get<std::string>();
  s.beta = j.at("beta").get<std::vector<double>>();
  s.position_bias_rate = j.value("position_bias_rate", 0.0);
}

inline void to_json(json& j, const SynthConfig& c) {
  j = json{{"modality", to_string(c.modality)},
           {"n_pairs", c.n_pairs},
           {"n_items", c.n_items},
           {"beta_human", c.beta_human},
           {"judges", c.judges},
           {"neutral_rate", c.neutral_rate},
           {"seed", c.seed},
           {"coupling", c.coupling == LabelCoupling::shared ? "shared" : "independent"}};
  if (!c.item_names.empty()) j["item_names"] = c.item_names;
}

inline void from_json(const json& j, SynthConfig& c) {
  c.modality = parse_modality(j.value("modality", "edit"));
  c.n_pairs = j.at("n_pairs").get<std::size_t>();
  c.beta_human = j.at("beta_human").get<std::vector<double>>();
  c.n_items = j.value("n_items", c.beta_human.size());
  c.judges = j.value("judges", std::vector<SynthJudge>{});
  c.neutral_rate = j.value("neutral_rate", 0.2);
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto coupling = j.value("coupling", "shared");
  if (coupling != "shared" && coupling != "independent") throw InvalidConfig("coupling must be shared or independent");
  c.coupling = coupling == "shared" ? LabelCoupling::shared : LabelCoupling::independent;
  c.item_names = j.value("item_names", std::vector<std::string>{});
}

inline json planted_json(const SyntheticStudy& s) {
  json judges = json::object();
  for (const auto& [name, pl] : s.planted) {
    json pref = json::array();
    for (auto side : pl.preferred) pref.push_back(label(side));
    judges[name] = json{{"preferred", pref}, {"biased", pl.biased}};
  }
  return json{{"config", s.config}, {"rubric", s.rubric}, {"features", s.features}, {"judges", judges}};
}

// Files for the CLI: raw records in the modality's source schema, the
// normalized pairs, and the planted truth read by the planted mock clients.
inline void write_study(const fs::path& dir, const SyntheticStudy& s) {
  fs::create_directories(dir);
  std::vector<json> raw;
  for (const auto& p : s.pairs) raw.push_back(to_raw_record(p));
  atomic_write_file(dir / ("raw_" + std::string(to_string(s.config.modality)) + ".jsonl"), to_jsonl(raw));
  std::vector<json> pairs;
  for (const auto& p : s.pairs) pairs.push_back(p);
  atomic_write_file(dir / "pairs.jsonl", to_jsonl(pairs));
  write_json(dir / "planted.json", planted_json(s));
}

// Planted truth as read back from planted.json (pairs are not needed).
struct PlantedTruth {
  Rubric rubric;
  ScoreMatrix features;
  std::map<std::string, PlantedJudgeLabels> judges;
  std::map<std::string, std::size_t, std::less<>> row;

  static PlantedTruth from_study(const SyntheticStudy& s) { return from_json_value(planted_json(s)); }

  static PlantedTruth from_json_value(const json& j) {
    PlantedTruth t;
    t.rubric = j.at("rubric").get<Rubric>();
    t.features = j.at("features").get<ScoreMatrix>();
    for (const auto& [name, v] : j.at("judges").items()) {
      PlantedJudgeLabels pl;
      for (const auto& x : v.at("preferred")) pl.preferred.push_back(side_from_label(x.get<int>()));
      pl.biased = v.at("biased").get<std::vector<bool>>();
      t.judges[name] = std::move(pl);
    }
    for (std::size_t i = 0; i < t.features.rows(); ++i) t.row[t.features.pair_ids[i]] = i;
    return t;
  }

  static PlantedTruth load(const fs::path& path) { return from_json_value(read_json(path)); }

  // (row, side) of the synthetic response shown in a prompt slot.
  std::optional<std::pair<std::size_t, Side>> locate(std::string_view slot) const {
    static const std::regex re(R"(synth-([A-Za-z0-9_]+)-([ab]))");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(slot.begin(), slot.end(), m, re)) return std::nullopt;
    auto it = row.find(m[1].str());
    if (it == row.end()) return std::nullopt;
    return std::make_pair(it->second, m[2].str() == "a" ? Side::a : Side::b);
  }
};

// Pairwise judge that answers from the planted labels: the slot holding the
// preferred response, or always the first slot on position-biased pairs.
class PlantedChatJudge : public ChatClient {
 public:
  PlantedChatJudge(std::shared_ptr<const PlantedTruth> truth, std::string judge)
      : truth_(std::move(truth)), judge_(std::move(judge)) {
    if (!truth_->judges.contains(judge_)) throw InvalidConfig("no planted labels for judge '" + judge_ + "'");
  }

  std::string complete(const ChatRequest& r) override {
    const auto slot = truth_->locate(extract_tagged(r.user, "assistant_a_response").value_or(""));
    if (!slot) return "Cannot tell.";
    const auto& pl = truth_->judges.at(judge_);
    const bool first = pl.biased[slot->first] || pl.preferred[slot->first] == slot->second;
    return std::string("Planted verdict.\n<answer>") + (first ? "[[A]]" : "[[B]]") + "</answer>";
  }

 private:
  std::shared_ptr<const PlantedTruth> truth_;
  std::string judge_;
};

// Scorer that reports the planted features. Axes it does not know are ties.
class PlantedScorer : public ChatClient {
 public:
  explicit PlantedScorer(std::shared_ptr<const PlantedTruth> truth) : truth_(std::move(truth)) {}

  std::string complete(const ChatRequest& r) override {
    const auto slot = truth_->locate(extract_tagged(r.user, "assistant_a_response").value_or(""));
    const auto block = extract_tagged(r.user, "scores").value_or("");
    static const std::regex line_re(R"(^\s*(\d+)\.\s*(.*?):\s*<A\|B\|TIE>\s*$)");
    std::string out = "<scores>\n";
    for (const auto& line : text::split_lines(block)) {
      std::smatch m;
      if (!std::regex_match(line, m, line_re)) continue;
      std::string verdict = "TIE";
      const auto& names = truth_->features.item_names;
      const auto col = std::find(names.begin(), names.end(), m[2].str());
      if (slot && col != names.end()) {
        // Scorer encoding: -1 means response_a is better.
        const int s = truth_->features.score(slot->first, static_cast<std::size_t>(col - names.begin()));
        if (s != 0) {
          const Side better = s < 0 ? Side::a : Side::b;
          verdict = better == slot->second ? "A" : "B";
        }
      }
      out += m[1].str() + ". " + m[2].str() + ": " + verdict + "\n";
    }
    return out + "</scores>";
  }

 private:
  std::shared_ptr<const PlantedTruth> truth_;
};

// Rubric proposer and aggregator in one: proposal prompts (which carry
// sampled responses) get the planted axes; aggregation prompts get back
// the distinct axes they list.
class PlantedRubricClient : public ChatClient {
 public:
  explicit PlantedRubricClient(std::shared_ptr<const PlantedTruth> truth) : truth_(std::move(truth)) {}

  std::string complete(const ChatRequest& r) override {
    if (r.user.find("Model A response:") != std::string::npos) return format_axes(truth_->rubric.items);
    static const std::regex line_re(R"(^(.+?): High: (.+) Low: (.+)$)");
    std::vector<RubricItem> items;
    std::set<std::string> seen;
    for (const auto& line : text::split_lines(r.user)) {
      std::smatch m;
      if (!std::regex_match(line, m, line_re) || line.find('{') != std::string::npos) continue;
      if (seen.insert(m[1].str()).second) items.push_back({m[1].str(), m[2].str(), m[3].str(), Origin::llm});
    }
    return items.empty() ? std::string(kNoDifferences) : format_axes(items);
  }

 private:
  std::shared_ptr<const PlantedTruth> truth_;
};

}  // namespace judgealign
