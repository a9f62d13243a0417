#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "judgealign/cli/pipeline.hpp"

namespace ja = judgealign;
using ja::json;

namespace {

ja::fs::path scratch(const std::string& name) {
  const auto d = ja::fs::temp_directory_path() / "judgealign_cli_test" / name;
  ja::fs::remove_all(d);
  ja::fs::create_directories(d);
  return d;
}

ja::SynthConfig small_study(ja::Modality m = ja::Modality::edit) {
  ja::SynthConfig c;
  c.modality = m;
  c.n_pairs = 120;
  c.beta_human = {1.0, -0.5, 0.0};
  c.judges = {{"aligned", {1.0, -0.5, 0.0}, 0.0}, {"flipped", {1.0, 0.5, 0.0}, 0.1}};
  c.seed = 11;
  return c;
}

// Writes a study plus its planted run config; returns the config path.
ja::fs::path make_study(const std::string& name, ja::Modality m = ja::Modality::edit, std::size_t n_boot = 50) {
  const auto dir = scratch(name);
  const auto study = ja::generate_synthetic_study(small_study(m));
  ja::write_study(dir, study);
  ja::write_json(dir / "run.json", ja::planted_run_config(study, n_boot));
  return dir / "run.json";
}

json config_json(const ja::fs::path& path) { return ja::read_json(path); }

std::string config_error_field(const json& j, const ja::fs::path& base) {
  try {
    ja::run_config_from_json(j, base);
  } catch (const ja::ConfigError& e) {
    return e.field();
  }
  return "(no error)";
}

std::map<std::string, std::string> tree(const ja::fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : ja::fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[ja::fs::relative(e.path(), root).string()] = ja::read_file(e.path());
  }
  return files;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(JUDGEALIGN_CLI) + " " + args + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunConfig, LoadsPlantedConfigAndResolvesPaths) {
  const auto path = make_study("load");
  const auto c = ja::load_run_config(path);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.modality, ja::Modality::edit);
  EXPECT_EQ(c.dataset.raw, path.parent_path() / "raw_edit.jsonl");
  EXPECT_EQ(c.output_dir, path.parent_path() / "out");
  EXPECT_EQ(c.log_dir(), path.parent_path() / "cache" / "logs");
  ASSERT_EQ(c.judges.size(), 2u);
  EXPECT_EQ(c.judges[1].mock["study"], (path.parent_path() / "planted.json").string());
  EXPECT_EQ(c.stats.n_boot, 50u);
  EXPECT_EQ(c.rubric.proposal.passes, 3u);
}

TEST(RunConfig, ErrorsNameTheField) {
  const auto path = make_study("errors");
  const auto base = path.parent_path();
  const auto good = config_json(path);

  auto j = good;
  j.erase("seed");
  EXPECT_EQ(config_error_field(j, base), "seed");
  j = good;
  j["dataset"]["raw"] = "missing.jsonl";
  EXPECT_EQ(config_error_field(j, base), "dataset.raw");
  j = good;
  j["judges"][1]["kind"] = "oracle";
  EXPECT_EQ(config_error_field(j, base), "judges[1].kind");
  j = good;
  j["stats"]["levle"] = 0.9;
  EXPECT_EQ(config_error_field(j, base), "stats.levle");
  j = good;
  j["stats"]["n_boot"] = "many";
  EXPECT_EQ(config_error_field(j, base), "stats.n_boot");
  j = good;
  j["judges"][0]["mock"]["study"] = "nowhere.json";
  EXPECT_EQ(config_error_field(j, base), "judges[0].mock.study");
  j = good;
  j["judges"][1]["name"] = "aligned";
  EXPECT_EQ(config_error_field(j, base), "judges[1].name");
  j = good;
  j["judges"][0] = json{{"name", "remote"}, {"kind", "chat_judge"}, {"model", "m"}};
  EXPECT_EQ(config_error_field(j, base), "judges[0].endpoint.base_url");
  j = good;
  j["rubric"].erase("proposer");
  EXPECT_EQ(config_error_field(j, base), "rubric.proposer");
  j = good;
  j["stats"]["pooled_test"] = "fancy";
  EXPECT_EQ(config_error_field(j, base), "stats.pooled_test");
}

TEST(RunConfig, OverridesTakePrecedence) {
  auto c = ja::load_run_config(make_study("overrides"));
  const auto rubric_seed = c.rubric.proposal.seed;
  ja::ConfigOverrides o;
  o.seed = 99;
  o.output_dir = "/tmp/elsewhere";
  o.judges = std::vector<std::string>{"flipped"};
  ja::apply_overrides(c, o);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_NE(c.rubric.proposal.seed, rubric_seed);
  EXPECT_EQ(c.output_dir, "/tmp/elsewhere");
  ASSERT_EQ(c.judges.size(), 1u);
  EXPECT_EQ(c.judges[0].name, "flipped");
  o = {};
  o.judges = std::vector<std::string>{"ghost"};
  EXPECT_THROW(ja::apply_overrides(c, o), ja::ConfigError);
}

TEST(Pipeline, StagesRefuseToRunWithoutTheirInputs) {
  const auto c = ja::load_run_config(make_study("dag"));
  auto missing = [&](ja::Stage s) {
    try {
      ja::run_stage(s, c);
    } catch (const ja::MissingPrerequisite& e) {
      return e.artifact();
    }
    return std::string("(ran)");
  };
  EXPECT_EQ(missing(ja::Stage::judge), "pairs");
  EXPECT_EQ(missing(ja::Stage::rubric), "pairs");
  EXPECT_EQ(missing(ja::Stage::pool), "fits");
  EXPECT_EQ(missing(ja::Stage::fit), "score_matrix");

  ja::run_stage(ja::Stage::ingest, c);
  EXPECT_EQ(missing(ja::Stage::evaluate), "judgments/aligned");
  EXPECT_EQ(missing(ja::Stage::score), "rubric");
  EXPECT_EQ(missing(ja::Stage::fit), "score_matrix");
  ja::run_stage(ja::Stage::rubric, c);
  ja::run_stage(ja::Stage::score, c);
  EXPECT_EQ(missing(ja::Stage::fit), "judgments/aligned");
  ja::run_stage(ja::Stage::judge, c);
  EXPECT_EQ(missing(ja::Stage::report), "fits");
  ja::run_stage(ja::Stage::fit, c);
  EXPECT_EQ(missing(ja::Stage::report), "pooled");
  ja::run_stage(ja::Stage::pool, c);
  ja::run_stage(ja::Stage::report, c);
  ja::run_stage(ja::Stage::evaluate, c);
  EXPECT_TRUE(ja::fs::exists(c.output_dir / "report" / "heatmap.csv"));
  EXPECT_TRUE(ja::fs::exists(c.output_dir / "report" / "accuracy.csv"));
}

TEST(Pipeline, AllStagesProduceTheReportTreeAndRecoverThePlantedModel) {
  const auto c = ja::load_run_config(make_study("all"));
  const auto results = ja::run_stage(ja::Stage::all, c);
  ASSERT_EQ(results.size(), 8u);
  for (const auto* f : {"pairs.jsonl", "rejects.jsonl", "dataset_stats.json", "judgments/aligned.jsonl",
                        "judgments/flipped.jsonl", "rubric.json", "score_matrix.json", "score_matrix.csv", "fits.json",
                        "pooled.json", "report/accuracy.csv", "report/accuracy.json", "report/heatmap.csv",
                        "report/heatmap.json", "report/coefficients.csv"}) {
    EXPECT_TRUE(ja::fs::exists(c.output_dir / f)) << f;
  }
  EXPECT_FALSE(ja::fs::exists(c.output_dir / "logs"));
  EXPECT_TRUE(ja::fs::exists(c.log_dir() / "judge.json"));

  // The planted scorer reproduces the planted features exactly.
  const auto study = ja::generate_synthetic_study(small_study());
  EXPECT_EQ(ja::read_json(c.output_dir / "score_matrix.json").get<ja::ScoreMatrix>(), study.features);
  const auto heat = ja::heatmap_from_json(ja::read_json(c.output_dir / "report" / "heatmap.json"));
  EXPECT_EQ(heat.judges, (std::vector<std::string>{"aligned", "flipped"}));
  EXPECT_EQ(heat.items.size(), 3u);
  const auto acc = ja::read_json(c.output_dir / "report" / "accuracy.json");
  EXPECT_EQ(acc[0]["consistency_rate"], 1.0);
}

TEST(Pipeline, RerunIsByteIdenticalAndMakesNoRemoteCalls) {
  const auto path = make_study("determinism");
  auto c1 = ja::load_run_config(path);
  const auto first = ja::run_stage(ja::Stage::all, c1);
  std::size_t calls = 0;
  for (const auto& r : first) calls += r.remote_calls();
  EXPECT_GT(calls, 0u);

  // Same cache, fresh output directory.
  auto c2 = c1;
  c2.output_dir = path.parent_path() / "out2";
  for (const auto& r : ja::run_stage(ja::Stage::all, c2)) EXPECT_EQ(r.remote_calls(), 0u) << ja::to_string(r.stage);
  EXPECT_EQ(tree(c1.output_dir), tree(c2.output_dir));

  // Independent cache as well.
  auto c3 = c1;
  c3.output_dir = path.parent_path() / "out3";
  c3.cache_dir = path.parent_path() / "cache3";
  ja::run_stage(ja::Stage::all, c3);
  EXPECT_EQ(tree(c1.output_dir), tree(c3.output_dir));

  // A rerun of the judge stage alone.
  const auto again = ja::run_stage(ja::Stage::judge, c1);
  EXPECT_EQ(again[0].remote_calls(), 0u);
  EXPECT_GT(again[0].clients[0].cache_hits, 0u);
}

TEST(Pipeline, JudgeFilterAndMockReward) {
  const auto path = make_study("roster", ja::Modality::completion);
  auto j = config_json(path);
  j["judges"].push_back(json{{"name", "rm"}, {"kind", "reward_model"}, {"model", "len"}, {"mock", {{"behavior", "length"}}}});
  j["judges"].push_back(json{{"name", "first"}, {"kind", "mock"}, {"mock", {{"behavior", "always_first"}}}});
  ja::write_json(path, j);
  auto c = ja::load_run_config(path);
  ja::ConfigOverrides o;
  o.judges = std::vector<std::string>{"rm", "first"};
  ja::apply_overrides(c, o);
  ja::run_stage(ja::Stage::ingest, c);
  ja::run_stage(ja::Stage::judge, c);
  ja::run_stage(ja::Stage::evaluate, c);
  EXPECT_FALSE(ja::fs::exists(c.output_dir / "judgments" / "aligned.jsonl"));
  const auto acc = ja::read_json(c.output_dir / "report" / "accuracy.json");
  ASSERT_EQ(acc.size(), 2u);
  EXPECT_EQ(acc[0]["judge"], "rm");
  EXPECT_EQ(acc[0]["consistency_rate"], 1.0);
  EXPECT_EQ(acc[0]["acc"], acc[0]["acc_pc"]);
  EXPECT_EQ(acc[1]["consistency_rate"], 0.0);
  EXPECT_EQ(acc[1]["acc"], 0.0);
}

TEST(Pipeline, UnreachableEndpointIsRemoteExhausted) {
  const auto path = make_study("remote");
  auto j = config_json(path);
  j["judges"] = json::array({json{{"name", "offline"},
                                  {"kind", "chat_judge"},
                                  {"model", "m"},
                                  {"max_attempts", 1},
                                  {"endpoint", {{"base_url", "http://127.0.0.1:9"}, {"timeout_seconds", 2}}}}});
  ja::write_json(path, j);
  auto c = ja::load_run_config(path);
  ja::run_stage(ja::Stage::ingest, c);
  try {
    ja::run_stage(ja::Stage::judge, c);
    FAIL();
  } catch (const ja::RemoteExhausted& e) {
    EXPECT_EQ(e.failures(), 2 * 120u);
    EXPECT_EQ(ja::exit_code_for(e), ja::kExitRemote);
  }
  // Failed records are still written and nothing failed is cached.
  EXPECT_EQ(ja::read_jsonl(c.output_dir / "judgments" / "offline.jsonl").size(), 120u);
  EXPECT_EQ(ja::read_json(c.log_dir() / "judge.json")["clients"][0]["failures"], 240);
}

TEST(Cli, ExitCodes) {
  const auto path = make_study("binary");
  const auto dir = path.parent_path();
  EXPECT_EQ(run_cli("fit --config " + path.string()), ja::kExitPrerequisite);
  EXPECT_EQ(run_cli("ingest --config " + (dir / "absent.json").string()), ja::kExitConfig);
  EXPECT_EQ(run_cli("ingest --config " + path.string() + " --judges ghost"), ja::kExitConfig);
  EXPECT_EQ(run_cli("no-such-stage"), ja::kExitConfig);
  EXPECT_EQ(run_cli("all --config " + path.string() + " --out " + (dir / "cli_out").string()), ja::kExitOk);
  EXPECT_TRUE(ja::fs::exists(dir / "cli_out" / "report" / "heatmap.csv"));

  const auto synth_dir = scratch("binary_synth");
  ja::write_json(synth_dir / "synth.json", json(small_study()));
  EXPECT_EQ(run_cli("synth --config " + (synth_dir / "synth.json").string() + " --out " + (synth_dir / "study").string() + " --n-boot 50"),
            ja::kExitOk);
  EXPECT_EQ(ja::read_json(synth_dir / "study" / "run.json"), ja::read_json(path));
}
