#include <CLI11.hpp>
#include <iostream>

#include "judgealign/cli/pipeline.hpp"

namespace ja = judgealign;

namespace {

std::string describe(ja::Stage s) {
  switch (s) {
    case ja::Stage::ingest: return "Normalize raw records into pairs.jsonl";
    case ja::Stage::judge: return "Query every judge in both presentation orders";
    case ja::Stage::evaluate: return "Accuracy table per judge";
    case ja::Stage::rubric: return "Discover (and merge) the rubric";
    case ja::Stage::score: return "Score every pair on every rubric item";
    case ja::Stage::fit: return "Fit human and judge preference models with bootstrap intervals";
    case ja::Stage::pool: return "Pool judge coefficients per rubric item";
    case ja::Stage::report: return "Write the misalignment heatmap and coefficient tables";
    case ja::Stage::all: return "Run every stage in order";
  }
  return {};
}

struct StageArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> cache;
  std::vector<std::string> judges;
};

void print_results(const std::vector<ja::StageResult>& results) {
  for (const auto& r : results) {
    std::cerr << ja::to_string(r.stage) << ": done";
    if (!r.clients.empty()) std::cerr << ", " << r.remote_calls() << " remote calls";
    std::cerr << "\n";
    for (const auto& n : r.notes) std::cerr << "  note: " << n << "\n";
  }
}

int run_pipeline(ja::Stage stage, const StageArgs& a) {
  auto cfg = ja::load_run_config(a.config);
  ja::ConfigOverrides o;
  o.seed = a.seed;
  if (a.out) o.output_dir = *a.out;
  if (a.cache) o.cache_dir = *a.cache;
  if (!a.judges.empty()) o.judges = a.judges;
  ja::apply_overrides(cfg, o);
  print_results(ja::run_stage(stage, cfg));
  return ja::kExitOk;
}

int run_synth(const std::string& config, const std::string& out, std::size_t n_boot) {
  ja::SynthConfig sc;
  try {
    sc = ja::read_json(config).get<ja::SynthConfig>();
  } catch (const ja::json::exception& e) {
    throw ja::ConfigError("--config", e.what());
  }
  const auto study = ja::generate_synthetic_study(sc);
  ja::write_study(out, study);
  ja::write_json(ja::fs::path(out) / "run.json", ja::planted_run_config(study, n_boot));
  std::cerr << "synth: wrote " << study.pairs.size() << " pairs and run.json to " << out << "\n";
  return ja::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise judge evaluation and rubric misalignment analysis"};
  app.require_subcommand(1);

  StageArgs args;
  std::optional<ja::Stage> chosen;
  std::vector<ja::Stage> stages(std::begin(ja::kPipelineOrder), std::end(ja::kPipelineOrder));
  stages.push_back(ja::Stage::all);
  for (auto stage : stages) {
    auto* sub = app.add_subcommand(std::string(ja::to_string(stage)), describe(stage));
    sub->add_option("--config", args.config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", args.seed, "Override the configured seed");
    sub->add_option("--out", args.out, "Override the output directory");
    sub->add_option("--cache", args.cache, "Override the cache directory");
    sub->add_option("--judges", args.judges, "Only these judges (comma separated)")->delimiter(',');
    sub->callback([&chosen, stage] { chosen = stage; });
  }

  std::string synth_config, synth_out;
  std::size_t synth_boot = 200;
  auto* synth = app.add_subcommand("synth", "Write a synthetic study and a run configuration for it");
  synth->add_option("--config", synth_config, "Synthetic study configuration (JSON)")->required();
  synth->add_option("--out", synth_out, "Study directory")->required();
  synth->add_option("--n-boot", synth_boot, "Bootstrap replicates in the generated run configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ja::kExitConfig;
  }

  try {
    if (synth->parsed()) return run_synth(synth_config, synth_out, synth_boot);
    return run_pipeline(*chosen, args);
  } catch (const ja::MissingPrerequisite& e) {
    std::cerr << "error: " << e.what() << " (run the stage that produces it first)\n";
    return ja::kExitPrerequisite;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ja::exit_code_for(e);
  }
}
