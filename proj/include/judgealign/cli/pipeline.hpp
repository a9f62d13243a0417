#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "judgealign/cli/config.hpp"
#include "judgealign/dataset/stats.hpp"
#include "judgealign/judging/http.hpp"
#include "judgealign/judging/mock.hpp"
#include "judgealign/report/report.hpp"
#include "judgealign/rubric/scoring.hpp"
#include "judgealign/synth/synth.hpp"

namespace judgealign {

enum class Stage { ingest, judge, evaluate, rubric, score, fit, pool, report, all };

inline constexpr Stage kPipelineOrder[] = {Stage::ingest, Stage::judge, Stage::evaluate, Stage::rubric,
                                           Stage::score,  Stage::fit,   Stage::pool,     Stage::report};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::judge: return "judge";
    case Stage::evaluate: return "evaluate";
    case Stage::rubric: return "rubric";
    case Stage::score: return "score";
    case Stage::fit: return "fit";
    case Stage::pool: return "pool";
    case Stage::report: return "report";
    case Stage::all: return "all";
  }
  return "?";
}

inline Stage parse_stage(std::string_view s) {
  for (auto st : kPipelineOrder)
    if (to_string(st) == s) return st;
  if (s == "all") return Stage::all;
  throw InvalidConfig("unknown stage '" + std::string(s) + "'");
}

// Some remote call still failed after all retries. Artifacts of the stage are
// written (failed items are recorded as such) so a rerun only retries those.
class RemoteExhausted : public Error {
 public:
  RemoteExhausted(std::string stage, std::size_t failures)
      : Error("remote_exhausted", stage + ": " + std::to_string(failures) + " remote calls failed after all retries"),
        failures_(failures) {}
  std::size_t failures() const noexcept { return failures_; }

 private:
  std::size_t failures_;
};

// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitPrerequisite = 3, kExitRemote = 4 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidConfig*>(&e)) return kExitConfig;
  if (dynamic_cast<const MissingPrerequisite*>(&e)) return kExitPrerequisite;
  if (dynamic_cast<const RemoteExhausted*>(&e) || dynamic_cast<const TransportError*>(&e)) return kExitRemote;
  return kExitFailure;
}

// Artifact locations under the output directory.
namespace artifact {
inline fs::path pairs(const fs::path& out) { return out / "pairs.jsonl"; }
inline fs::path rejects(const fs::path& out) { return out / "rejects.jsonl"; }
inline fs::path dataset_stats(const fs::path& out) { return out / "dataset_stats.json"; }
inline fs::path judgments(const fs::path& out, const std::string& judge) { return out / "judgments" / (judge + ".jsonl"); }
inline fs::path rubric(const fs::path& out) { return out / "rubric.json"; }
inline fs::path score_matrix(const fs::path& out) { return out / "score_matrix.json"; }
inline fs::path score_matrix_csv(const fs::path& out) { return out / "score_matrix.csv"; }
inline fs::path fits(const fs::path& out) { return out / "fits.json"; }
inline fs::path pooled(const fs::path& out) { return out / "pooled.json"; }
inline fs::path accuracy_stem(const fs::path& out) { return out / "report" / "accuracy"; }
inline fs::path heatmap_stem(const fs::path& out) { return out / "report" / "heatmap"; }
inline fs::path coefficients(const fs::path& out) { return out / "report" / "coefficients.csv"; }
}  // namespace artifact

// Remote traffic of one client during a stage. Remote calls are cache misses.
struct ClientUsage {
  std::string name;
  std::size_t remote_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t failures = 0;
};

struct StageResult {
  Stage stage = Stage::ingest;
  std::vector<ClientUsage> clients;
  std::vector<std::string> notes;

  std::size_t remote_calls() const {
    std::size_t n = 0;
    for (const auto& c : clients) n += c.remote_calls;
    return n;
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : clients) n += c.failures;
    return n;
  }
};

inline void to_json(json& j, const ClientUsage& u) {
  j = json{{"client", u.name}, {"remote_calls", u.remote_calls}, {"cache_hits", u.cache_hits}, {"failures", u.failures}};
}

inline void to_json(json& j, const StageResult& r) {
  j = json{{"stage", to_string(r.stage)}, {"remote_calls", r.remote_calls()}, {"clients", r.clients}, {"notes", r.notes}};
}

namespace detail {

// Counts transport failures that escape the wrapped client.
class FailureCountingChat : public ChatClient {
 public:
  explicit FailureCountingChat(std::unique_ptr<ChatClient> inner) : inner_(std::move(inner)) {}
  std::string complete(const ChatRequest& r) override {
    try {
      return inner_->complete(r);
    } catch (const TransportError&) {
      ++failures_;
      throw;
    }
  }
  std::size_t failures() const { return failures_.load(); }

 private:
  std::unique_ptr<ChatClient> inner_;
  std::atomic<std::size_t> failures_{0};
};

class FailureCountingReward : public RewardClient {
 public:
  explicit FailureCountingReward(std::unique_ptr<RewardClient> inner) : inner_(std::move(inner)) {}
  double score(const RewardRequest& r) override {
    try {
      return inner_->score(r);
    } catch (const TransportError&) {
      ++failures_;
      throw;
    }
  }
  std::size_t failures() const { return failures_.load(); }

 private:
  std::unique_ptr<RewardClient> inner_;
  std::atomic<std::size_t> failures_{0};
};

}  // namespace detail

// The clients behind one JudgeSpec: backend, failure counter, cache.
class JudgeClients {
 public:
  ChatClient* chat() { return chat_.get(); }
  RewardClient* reward() { return reward_.get(); }

  ClientUsage usage(const std::string& name) const {
    ClientUsage u{name};
    if (chat_) u = {name, chat_->remote_calls(), chat_->hits(), chat_counter_->failures()};
    if (reward_) u = {name, reward_->remote_calls(), reward_->hits(), reward_counter_->failures()};
    return u;
  }

 private:
  friend class ClientFactory;
  std::unique_ptr<detail::FailureCountingChat> chat_counter_;
  std::unique_ptr<detail::FailureCountingReward> reward_counter_;
  std::unique_ptr<CachedChatClient> chat_;
  std::unique_ptr<CachedRewardClient> reward_;
};

// Builds the backend a JudgeSpec names and wraps it in the response cache,
// namespaced by the spec's name.
//   chat_judge                     HTTP chat-completions endpoint
//   reward_model                   HTTP reward endpoint, or a MockRewardModel
//                                  when `mock.behavior` is set
//   mock, behavior always_first | always_second | longer | hash
//                                  MockChatJudge
//   mock, behavior planted         answers from a synthetic study's labels
//                                  (`mock.study`, `mock.judge` defaulting to name)
//   mock, behavior planted_scorer  reports the study's planted features
//   mock, behavior planted_rubric  proposes the study's planted rubric
class ClientFactory {
 public:
  explicit ClientFactory(fs::path cache_dir) : cache_(std::move(cache_dir)) {}

  std::unique_ptr<JudgeClients> make(const JudgeSpec& spec) {
    auto out = std::make_unique<JudgeClients>();
    if (spec.kind == JudgeKind::reward_model) {
      std::unique_ptr<RewardClient> inner;
      if (spec.mock.is_object() && spec.mock.contains("behavior")) {
        inner = std::make_unique<MockRewardModel>(spec.mock["behavior"].get<std::string>());
      } else {
        inner = std::make_unique<HttpRewardClient>(spec.endpoint);
      }
      out->reward_counter_ = std::make_unique<detail::FailureCountingReward>(std::move(inner));
      out->reward_ = std::make_unique<CachedRewardClient>(*out->reward_counter_, cache_, spec.name);
      return out;
    }
    std::unique_ptr<ChatClient> inner;
    if (spec.kind == JudgeKind::chat_judge) {
      inner = std::make_unique<HttpChatClient>(spec.endpoint);
    } else {
      const auto behavior = spec.mock.value("behavior", std::string());
      if (behavior == "planted") {
        inner = std::make_unique<PlantedChatJudge>(truth(spec), spec.mock.value("judge", spec.name));
      } else if (behavior == "planted_scorer") {
        inner = std::make_unique<PlantedScorer>(truth(spec));
      } else if (behavior == "planted_rubric") {
        inner = std::make_unique<PlantedRubricClient>(truth(spec));
      } else {
        inner = std::make_unique<MockChatJudge>(behavior);
      }
    }
    out->chat_counter_ = std::make_unique<detail::FailureCountingChat>(std::move(inner));
    out->chat_ = std::make_unique<CachedChatClient>(*out->chat_counter_, cache_, spec.name);
    return out;
  }

 private:
  std::shared_ptr<const PlantedTruth> truth(const JudgeSpec& spec) {
    if (!spec.mock.contains("study")) throw InvalidConfig("judge " + spec.name + ": planted mocks need mock.study");
    const auto path = spec.mock["study"].get<std::string>();
    auto& slot = truths_[path];
    if (!slot) slot = std::make_shared<const PlantedTruth>(PlantedTruth::load(path));
    return slot;
  }

  ResponseCache cache_;
  std::map<std::string, std::shared_ptr<const PlantedTruth>> truths_;
};

namespace detail {

inline void require_artifact(const fs::path& path, const std::string& name) {
  if (!fs::exists(path)) throw MissingPrerequisite(name);
}

inline std::vector<PreferencePair> load_pairs(const fs::path& out) {
  require_artifact(artifact::pairs(out), "pairs");
  std::vector<PreferencePair> pairs;
  for (const auto& line : read_jsonl(artifact::pairs(out))) {
    if (line.value.is_discarded()) throw FormatError("pairs.jsonl line " + std::to_string(line.line_no) + " is not JSON");
    pairs.push_back(line.value.get<PreferencePair>());
  }
  return pairs;
}

inline std::vector<JudgmentRecord> load_judgments(const fs::path& out, const std::string& judge) {
  const auto path = artifact::judgments(out, judge);
  require_artifact(path, "judgments/" + judge);
  std::vector<JudgmentRecord> recs;
  for (const auto& line : read_jsonl(path)) {
    if (line.value.is_discarded()) throw FormatError(path.string() + " line " + std::to_string(line.line_no) + " is not JSON");
    recs.push_back(line.value.get<JudgmentRecord>());
  }
  return recs;
}

inline std::vector<RubricItem> load_items(const fs::path& path) {
  const auto j = read_json(path);
  const json& arr = j.is_object() && j.contains("items") ? j["items"] : j;
  if (!arr.is_array()) throw FormatError(path.string() + ": expected a list of rubric items");
  return arr.get<std::vector<RubricItem>>();
}

inline std::vector<std::string> load_comments(const fs::path& path) {
  std::vector<std::string> out;
  for (auto& line : text::split_lines(read_file(path))) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(line);
  }
  return out;
}

}  // namespace detail

// Runs stages against one run configuration. Every stage reads its inputs
// from the output directory and refuses to start when one is missing.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)), factory_(cfg_.cache_dir) {
    if (cfg_.templates_dir) {
      judge_templates_ = TemplateSet::from_directory(*cfg_.templates_dir);
      rubric_templates_ = RubricTemplates::from_directory(*cfg_.templates_dir);
    }
  }

  const RunConfig& config() const { return cfg_; }

  // `all` runs every stage in DAG order and returns one result per stage.
  std::vector<StageResult> run(Stage stage) {
    std::vector<StageResult> results;
    if (stage == Stage::all) {
      for (auto s : kPipelineOrder) results.push_back(run_one(s));
    } else {
      results.push_back(run_one(stage));
    }
    return results;
  }

 private:
  const fs::path& out() const { return cfg_.output_dir; }

  StageResult run_one(Stage s) {
    StageResult r{s};
    switch (s) {
      case Stage::ingest: ingest(r); break;
      case Stage::judge: judge(r); break;
      case Stage::evaluate: evaluate(r); break;
      case Stage::rubric: rubric(r); break;
      case Stage::score: score(r); break;
      case Stage::fit: fit(r); break;
      case Stage::pool: pool(r); break;
      case Stage::report: report(r); break;
      case Stage::all: break;
    }
    fs::create_directories(cfg_.log_dir());
    write_json(cfg_.log_dir() / (std::string(to_string(s)) + ".json"), json(r));
    if (r.failures() > 0) throw RemoteExhausted(std::string(to_string(s)), r.failures());
    return r;
  }

  void ingest(StageResult&) {
    const auto lines = read_jsonl(cfg_.dataset.raw);
    NormalizeOptions opts{FieldMap::from_json(cfg_.modality, cfg_.dataset.field_map), cfg_.dataset.chat_filter};
    const auto res = normalize_records(cfg_.modality, lines, opts);
    fs::create_directories(out());
    std::vector<json> pairs(res.pairs.begin(), res.pairs.end());
    atomic_write_file(artifact::pairs(out()), to_jsonl(pairs));
    std::vector<json> rejects(res.rejects.begin(), res.rejects.end());
    atomic_write_file(artifact::rejects(out()), to_jsonl(rejects));
    write_json(artifact::dataset_stats(out()), compute_dataset_stats(res.pairs, HeuristicLanguageDetector{}));
  }

  void judge(StageResult& r) {
    const auto pairs = detail::load_pairs(out());
    fs::create_directories(out() / "judgments");
    for (const auto& spec : cfg_.judges) {
      auto clients = factory_.make(spec);
      const auto recs = judge_dataset(spec, clients->chat(), clients->reward(), pairs, judge_templates_);
      std::vector<json> lines(recs.begin(), recs.end());
      atomic_write_file(artifact::judgments(out(), spec.name), to_jsonl(lines));
      r.clients.push_back(clients->usage(spec.name));
    }
  }

  void evaluate(StageResult&) {
    const auto pairs = detail::load_pairs(out());
    std::vector<AccuracyRow> rows;
    for (const auto& spec : cfg_.judges) {
      const auto recs = detail::load_judgments(out(), spec.name);
      AccuracyRow row{spec.name, cfg_.modality, accuracy_metrics(recs, pairs, cfg_.stats.metrics_mode)};
      row.split = context_split_metrics(recs, pairs, fits_from_judgments(recs), cfg_.stats.metrics_mode);
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("judges", "the roster is empty");
    emit_accuracy_table(rows, artifact::accuracy_stem(out()));
  }

  void rubric(StageResult& r) {
    const auto pairs = detail::load_pairs(out());
    const auto& rc = cfg_.rubric;
    std::map<std::string, std::unique_ptr<JudgeClients>> clients;
    auto client_for = [&](const JudgeSpec& spec) -> ChatClient& {
      auto& slot = clients[spec.name];
      if (!slot) slot = factory_.make(spec);
      return *slot->chat();
    };

    Rubric rub;
    if (rc.items_file) {
      rub.modality = cfg_.modality;
      rub.items = detail::load_items(*rc.items_file);
      rub.provenance = json{{"source", "items_file"}};
      rub.validate();
    } else {
      ChatClient& proposer = client_for(*rc.proposer);
      ChatClient& aggregator = client_for(*rc.aggregator);
      if (&proposer == &aggregator) {
        rub = discover_rubric(pairs, cfg_.modality, *rc.proposer, *rc.aggregator, proposer, rc.proposal,
                              rubric_templates_);
      } else {
        // Proposals and aggregation go to different clients.
        SplitClient split(proposer, aggregator);
        rub = discover_rubric(pairs, cfg_.modality, *rc.proposer, *rc.aggregator, split, rc.proposal,
                              rubric_templates_);
      }
    }

    std::vector<RubricItem> human;
    if (rc.human_items) {
      for (auto it : detail::load_items(*rc.human_items)) {
        it.origin = Origin::human;
        human.push_back(std::move(it));
      }
    }
    if (rc.human_comments) {
      const auto comments = detail::load_comments(*rc.human_comments);
      const auto parsed = propose_from_comments(comments, *rc.proposer, client_for(*rc.proposer), rc.comment_batch,
                                                rubric_templates_);
      for (auto it : parsed.items) {
        it.origin = Origin::human;
        human.push_back(std::move(it));
      }
    }
    if (!human.empty()) rub = merge_rubrics(rub, human, *rc.aggregator, client_for(*rc.aggregator), rubric_templates_);

    fs::create_directories(out());
    write_json(artifact::rubric(out()), rub);
    for (const auto& [name, c] : clients) r.clients.push_back(c->usage(name));
  }

  void score(StageResult& r) {
    const auto pairs = detail::load_pairs(out());
    detail::require_artifact(artifact::rubric(out()), "rubric");
    const auto rub = read_json(artifact::rubric(out())).get<Rubric>();
    auto clients = factory_.make(*cfg_.scorer);
    const auto S = build_feature_matrix(pairs, rub, *cfg_.scorer, *clients->chat(), rubric_templates_);
    write_json(artifact::score_matrix(out()), S);
    atomic_write_file(artifact::score_matrix_csv(out()), score_matrix_csv(S));
    r.clients.push_back(clients->usage(cfg_.scorer->name));
    std::size_t masked = 0;
    for (auto m : S.masked) masked += m;
    if (masked) r.notes.push_back(std::to_string(masked) + " scores masked (scorer disagreement or failure)");
  }

  void fit(StageResult& r) {
    detail::require_artifact(artifact::score_matrix(out()), "score_matrix");
    const auto pairs = detail::load_pairs(out());
    const auto S = read_json(artifact::score_matrix(out())).get<ScoreMatrix>();
    std::vector<std::pair<std::string, Labels>> judges;
    for (const auto& spec : cfg_.judges) {
      judges.emplace_back(spec.name, judge_labels(S, detail::load_judgments(out(), spec.name)));
    }
    const auto analysis = fit_misalignment(S, human_labels(S, pairs), judges, cfg_.analysis_options());
    r.notes = analysis.notes;
    write_json(artifact::fits(out()), analysis);
  }

  void pool(StageResult& r) {
    detail::require_artifact(artifact::fits(out()), "fits");
    auto analysis = read_json(artifact::fits(out())).get<MisalignmentAnalysis>();
    const auto before = analysis.notes.size();
    pool_misalignment(analysis, cfg_.analysis_options());
    r.notes.assign(analysis.notes.begin() + static_cast<std::ptrdiff_t>(before), analysis.notes.end());
    write_json(artifact::pooled(out()), json{{"pooled", analysis.pooled}, {"notes", r.notes}});
  }

  void report(StageResult&) {
    detail::require_artifact(artifact::fits(out()), "fits");
    detail::require_artifact(artifact::pooled(out()), "pooled");
    const auto analysis = read_json(artifact::fits(out())).get<MisalignmentAnalysis>();
    const auto pooled = read_json(artifact::pooled(out())).at("pooled").get<std::vector<PooledEstimate>>();
    emit_heatmap(analysis.cells, pooled, cfg_.modality, artifact::heatmap_stem(out()));
    atomic_write_file(artifact::coefficients(out()), coefficients_csv(analysis));
  }

  // Every fitted coefficient with its interval, human first.
  static std::string coefficients_csv(const MisalignmentAnalysis& a) {
    std::string s = "source,item,coefficient,ci_lower,ci_upper,se,n_used,ridge_used\n";
    auto row = [&](const std::string& source, const PreferenceModel& m, const std::vector<CoefficientCI>* cis) {
      for (std::size_t c = 0; c < m.items.size(); ++c) {
        s += detail::csv_field(source) + "," + detail::csv_field(m.items[c]) + "," + format_fixed(m.coefficients[c], 6) +
             ",";
        if (cis) {
          s += format_fixed((*cis)[c].lower, 6) + "," + format_fixed((*cis)[c].upper, 6) + "," +
               format_fixed((*cis)[c].se, 6);
        } else {
          s += ",,";
        }
        s += "," + std::to_string(m.n_used) + "," + (m.ridge_used ? "1" : "0") + "\n";
      }
    };
    row("human", a.human, a.human_bootstrap ? &a.human_bootstrap->cis : nullptr);
    for (const auto& jf : a.judges) row(jf.judge, jf.fit.model, &jf.fit.cis);
    return s;
  }

  // Routes proposal prompts and aggregation prompts to different backends.
  class SplitClient : public ChatClient {
   public:
    SplitClient(ChatClient& proposer, ChatClient& aggregator) : proposer_(proposer), aggregator_(aggregator) {}
    std::string complete(const ChatRequest& r) override {
      return r.user.find("Model A response:") != std::string::npos ? proposer_.complete(r) : aggregator_.complete(r);
    }

   private:
    ChatClient& proposer_;
    ChatClient& aggregator_;
  };

  RunConfig cfg_;
  ClientFactory factory_;
  TemplateSet judge_templates_;
  RubricTemplates rubric_templates_;
};

inline std::vector<StageResult> run_stage(Stage stage, const RunConfig& cfg) { return Pipeline(cfg).run(stage); }

// Run configuration that drives a written synthetic study through every
// stage with planted mock clients. Paths are relative to the study directory.
inline json planted_run_config(const SyntheticStudy& s, std::size_t n_boot = 200) {
  const std::string modality(to_string(s.config.modality));
  auto mock = [](const std::string& name, const std::string& behavior) {
    return json{{"name", name}, {"kind", "mock"}, {"model", "planted"},
                {"mock", {{"behavior", behavior}, {"study", "planted.json"}}}};
  };
  json judges = json::array();
  for (const auto& j : s.config.judges) judges.push_back(mock(j.name, "planted"));
  return json{{"seed", s.config.seed},
              {"modality", modality},
              {"dataset", {{"raw", "raw_" + modality + ".jsonl"}}},
              {"judges", judges},
              {"rubric", {{"proposer", mock("proposer", "planted_rubric")}, {"aggregator", mock("aggregator", "planted_rubric")}}},
              {"scorer", mock("scorer", "planted_scorer")},
              {"stats", {{"n_boot", n_boot}}},
              {"cache_dir", "cache"},
              {"output_dir", "out"}};
}

}  // namespace judgealign
