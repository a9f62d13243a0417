#pragma once

#include <cstdint>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "judgealign/dataset/normalize.hpp"
#include "judgealign/judging/judge.hpp"
#include "judgealign/metrics/accuracy.hpp"
#include "judgealign/prefstats/analysis.hpp"
#include "judgealign/rubric/axes.hpp"

namespace judgealign {

namespace detail {

// Typed access to one JSON object of the run config. Errors carry the dotted
// path of the offending field; unknown keys are rejected to catch typos.
class ConfigNode {
 public:
  ConfigNode(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where(), "expected an object");
  }

  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
  const std::string& where() const { return path_.empty() ? root_ : path_; }
  bool has(std::string_view key) const { return j_.contains(key) && !j_.at(std::string(key)).is_null(); }

  template <typename T>
  T get(std::string_view key, T fallback) const {
    return has(key) ? convert<T>(key) : fallback;
  }

  template <typename T>
  T require(std::string_view key) const {
    if (!has(key)) throw ConfigError(field(key), "required field is missing");
    return convert<T>(key);
  }

  std::optional<ConfigNode> child(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return ConfigNode(j_.at(std::string(key)), field(key));
  }

  const json& raw(std::string_view key) const { return j_.at(std::string(key)); }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(field(k), "unknown field");
    }
  }

 private:
  template <typename T>
  T convert(std::string_view key) const {
    try {
      return j_.at(std::string(key)).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  inline static const std::string root_ = "(root)";
};

inline fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

inline void require_file(const fs::path& p, const std::string& field) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw ConfigError(field, "file not found: " + p.string());
}

inline void require_positive(std::size_t v, const std::string& field) {
  if (v == 0) throw ConfigError(field, "must be positive");
}

}  // namespace detail

// Judge names become file names under judgments/ and cache namespaces.
inline bool valid_judge_name(const std::string& name) {
  static const std::regex re(R"([A-Za-z0-9][A-Za-z0-9._-]*)");
  return std::regex_match(name, re);
}

// Paths inside `mock` (the planted study) are resolved against `base`.
inline JudgeSpec judge_spec_from_config(const detail::ConfigNode& n, const fs::path& base) {
  n.allow({"name", "kind", "model", "endpoint", "context_window", "decoding", "max_attempts", "max_in_flight", "mock"});
  JudgeSpec s;
  s.name = n.require<std::string>("name");
  if (!valid_judge_name(s.name)) throw ConfigError(n.field("name"), "use letters, digits, '.', '_' or '-'");
  try {
    s.kind = parse_judge_kind(n.require<std::string>("kind"));
  } catch (const InvalidConfig& e) {
    throw ConfigError(n.field("kind"), e.what());
  }
  s.model = n.get<std::string>("model", s.kind == JudgeKind::mock ? "mock" : "");
  if (s.model.empty()) throw ConfigError(n.field("model"), "required for remote judges");
  if (auto e = n.child("endpoint")) {
    e->allow({"base_url", "api_key_env", "timeout_seconds"});
    s.endpoint.base_url = e->require<std::string>("base_url");
    s.endpoint.api_key_env = e->get<std::string>("api_key_env", "");
    s.endpoint.timeout_seconds = e->get<int>("timeout_seconds", s.endpoint.timeout_seconds);
  }
  s.context_window = n.get<std::size_t>("context_window", s.context_window);
  detail::require_positive(s.context_window, n.field("context_window"));
  if (auto d = n.child("decoding")) {
    d->allow({"temperature", "max_tokens"});
    s.decoding.temperature = d->get<double>("temperature", s.decoding.temperature);
    s.decoding.max_tokens = d->get<int>("max_tokens", s.decoding.max_tokens);
  }
  s.max_attempts = n.get<int>("max_attempts", s.max_attempts);
  if (s.max_attempts < 1) throw ConfigError(n.field("max_attempts"), "must be at least 1");
  s.max_in_flight = n.get<std::size_t>("max_in_flight", s.max_in_flight);
  detail::require_positive(s.max_in_flight, n.field("max_in_flight"));

  const bool mock_backed = s.kind == JudgeKind::mock || (s.kind == JudgeKind::reward_model && n.has("mock"));
  if (mock_backed) {
    const auto m = n.child("mock");
    if (!m) throw ConfigError(n.field("mock"), "mock judges need a behavior");
    m->allow({"behavior", "study", "judge"});
    s.mock = json::object();
    s.mock["behavior"] = m->require<std::string>("behavior");
    if (m->has("study")) {
      const auto study = detail::resolve(base, m->require<std::string>("study"));
      detail::require_file(study, m->field("study"));
      s.mock["study"] = study.string();
    }
    if (m->has("judge")) s.mock["judge"] = m->require<std::string>("judge");
  } else if (s.endpoint.base_url.empty()) {
    throw ConfigError(n.field("endpoint.base_url"), "required for remote judges");
  }
  return s;
}

struct DatasetConfig {
  fs::path raw;
  json field_map = json::object();
  ChatFilterConfig chat_filter = ChatFilterConfig::defaults();
};

struct RubricConfig {
  ProposalConfig proposal;
  std::optional<fs::path> items_file;      // fixed rubric; skips discovery
  std::optional<fs::path> human_items;     // JSON array of {name, high, low}
  std::optional<fs::path> human_comments;  // one comment per line
  std::size_t comment_batch = 20;
  std::optional<JudgeSpec> proposer;
  std::optional<JudgeSpec> aggregator;
};

struct StatsConfig {
  std::size_t n_boot = 1000;
  double level = 0.95;
  MetricsMode metrics_mode = MetricsMode::consistent;
  PooledTest pooled_test = PooledTest::pooled_se;
  std::size_t workers = 1;
  bool intercept = false;
};

struct RunConfig {
  fs::path source;  // config file, empty when built in code
  std::uint64_t seed = 0;
  Modality modality = Modality::completion;
  DatasetConfig dataset;
  std::vector<JudgeSpec> judges;
  RubricConfig rubric;
  std::optional<JudgeSpec> scorer;
  StatsConfig stats;
  std::optional<fs::path> templates_dir;
  fs::path cache_dir;
  fs::path output_dir;
  std::optional<fs::path> log_dir_override;

  // Remote-call logs live beside the cache, outside the report tree.
  fs::path log_dir() const { return log_dir_override ? *log_dir_override : cache_dir / "logs"; }

  AnalysisOptions analysis_options() const {
    AnalysisOptions o;
    o.bootstrap.n_boot = stats.n_boot;
    o.bootstrap.seed = seed;
    o.bootstrap.level = stats.level;
    o.bootstrap.workers = stats.workers;
    o.bootstrap.fit.intercept = stats.intercept;
    o.pooled_test = stats.pooled_test;
    return o;
  }
};

// Relative paths in the file resolve against the file's directory.
inline RunConfig run_config_from_json(const json& j, const fs::path& base) {
  using detail::ConfigNode;
  const ConfigNode root(j, "");
  root.allow({"seed", "modality", "dataset", "judges", "rubric", "scorer", "stats", "templates_dir", "cache_dir",
              "output_dir", "log_dir"});
  RunConfig c;
  c.seed = root.require<std::uint64_t>("seed");
  try {
    c.modality = parse_modality(root.require<std::string>("modality"));
  } catch (const UnknownModality& e) {
    throw ConfigError("modality", e.what());
  }

  const auto ds = root.child("dataset");
  if (!ds) throw ConfigError("dataset", "required field is missing");
  ds->allow({"raw", "field_map", "chat_filter"});
  c.dataset.raw = detail::resolve(base, ds->require<std::string>("raw"));
  detail::require_file(c.dataset.raw, "dataset.raw");
  if (ds->has("field_map")) {
    c.dataset.field_map = ds->raw("field_map");
    try {
      (void)FieldMap::from_json(c.modality, c.dataset.field_map);
    } catch (const std::exception& e) {
      throw ConfigError("dataset.field_map", e.what());
    }
  }
  if (ds->has("chat_filter")) {
    json f = ds->raw("chat_filter");
    if (f.is_string()) {
      const auto path = detail::resolve(base, f.get<std::string>());
      detail::require_file(path, "dataset.chat_filter");
      f = read_json(path);
    }
    try {
      c.dataset.chat_filter = ChatFilterConfig::from_json(f);
    } catch (const std::exception& e) {
      throw ConfigError("dataset.chat_filter", e.what());
    }
  }

  if (!root.has("judges") || !root.raw("judges").is_array()) throw ConfigError("judges", "expected a list of judges");
  std::set<std::string> names;
  for (std::size_t i = 0; i < root.raw("judges").size(); ++i) {
    const ConfigNode n(root.raw("judges")[i], "judges[" + std::to_string(i) + "]");
    auto s = judge_spec_from_config(n, base);
    if (!names.insert(s.name).second) throw ConfigError(n.field("name"), "duplicate judge name " + s.name);
    c.judges.push_back(std::move(s));
  }

  if (const auto r = root.child("rubric")) {
    r->allow({"passes", "samples_per_pass", "batch_size", "seed", "items_file", "human_items", "human_comments",
              "comment_batch", "proposer", "aggregator"});
    auto& p = c.rubric.proposal;
    p.passes = r->get<std::size_t>("passes", p.passes);
    p.samples_per_pass = r->get<std::size_t>("samples_per_pass", p.samples_per_pass);
    p.batch_size = r->get<std::size_t>("batch_size", p.batch_size);
    detail::require_positive(p.passes, "rubric.passes");
    detail::require_positive(p.batch_size, "rubric.batch_size");
    if (p.samples_per_pass < p.batch_size) throw ConfigError("rubric.samples_per_pass", "must be at least batch_size");
    p.seed = r->get<std::uint64_t>("seed", derived_seed(c.seed, "rubric"));
    auto file = [&](const char* key) -> std::optional<fs::path> {
      if (!r->has(key)) return std::nullopt;
      auto path = detail::resolve(base, r->require<std::string>(key));
      detail::require_file(path, r->field(key));
      return path;
    };
    c.rubric.items_file = file("items_file");
    c.rubric.human_items = file("human_items");
    c.rubric.human_comments = file("human_comments");
    c.rubric.comment_batch = r->get<std::size_t>("comment_batch", c.rubric.comment_batch);
    detail::require_positive(c.rubric.comment_batch, "rubric.comment_batch");
    if (auto n = r->child("proposer")) c.rubric.proposer = judge_spec_from_config(*n, base);
    if (auto n = r->child("aggregator")) c.rubric.aggregator = judge_spec_from_config(*n, base);
  } else {
    c.rubric.proposal.seed = derived_seed(c.seed, "rubric");
  }
  if (!c.rubric.items_file) {
    if (!c.rubric.proposer) throw ConfigError("rubric.proposer", "required unless rubric.items_file is set");
    if (!c.rubric.aggregator) throw ConfigError("rubric.aggregator", "required unless rubric.items_file is set");
  } else if ((c.rubric.human_items || c.rubric.human_comments) && !c.rubric.aggregator) {
    throw ConfigError("rubric.aggregator", "required to merge human items");
  }
  if (c.rubric.human_comments && !c.rubric.proposer) {
    throw ConfigError("rubric.proposer", "required to turn annotator comments into items");
  }
  for (const auto* s : {&c.rubric.proposer, &c.rubric.aggregator}) {
    if (*s && (*s)->kind == JudgeKind::reward_model) throw ConfigError("rubric", "proposer and aggregator must be chat models");
  }

  if (auto n = root.child("scorer")) {
    c.scorer = judge_spec_from_config(*n, base);
    if (c.scorer->kind == JudgeKind::reward_model) throw ConfigError("scorer.kind", "the scorer must be a chat model");
  } else {
    throw ConfigError("scorer", "required field is missing");
  }

  if (const auto s = root.child("stats")) {
    s->allow({"n_boot", "level", "metrics_mode", "pooled_test", "workers", "intercept"});
    c.stats.n_boot = s->get<std::size_t>("n_boot", c.stats.n_boot);
    if (c.stats.n_boot < 2) throw ConfigError("stats.n_boot", "must be at least 2");
    c.stats.level = s->get<double>("level", c.stats.level);
    if (!(c.stats.level > 0.0 && c.stats.level < 1.0)) throw ConfigError("stats.level", "must be in (0, 1)");
    try {
      c.stats.metrics_mode = parse_metrics_mode(s->get<std::string>("metrics_mode", "consistent"));
    } catch (const Error& e) {
      throw ConfigError("stats.metrics_mode", e.what());
    }
    try {
      c.stats.pooled_test = parse_pooled_test(s->get<std::string>("pooled_test", "pooled_se"));
    } catch (const Error& e) {
      throw ConfigError("stats.pooled_test", e.what());
    }
    c.stats.workers = s->get<std::size_t>("workers", c.stats.workers);
    detail::require_positive(c.stats.workers, "stats.workers");
    c.stats.intercept = s->get<bool>("intercept", c.stats.intercept);
  }

  if (root.has("templates_dir")) {
    c.templates_dir = detail::resolve(base, root.require<std::string>("templates_dir"));
    if (!fs::is_directory(*c.templates_dir)) throw ConfigError("templates_dir", "directory not found");
  }
  c.cache_dir = detail::resolve(base, root.get<std::string>("cache_dir", "cache"));
  c.output_dir = detail::resolve(base, root.get<std::string>("output_dir", "out"));
  if (root.has("log_dir")) c.log_dir_override = detail::resolve(base, root.require<std::string>("log_dir"));
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("--config", "file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
  }
  auto c = run_config_from_json(j, fs::absolute(path).parent_path());
  c.source = path;
  return c;
}

// Command-line values; they take precedence over the file. Relative paths
// given here resolve against the working directory.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> output_dir;
  std::optional<fs::path> cache_dir;
  std::optional<std::vector<std::string>> judges;  // keep only these, in roster order
};

inline void apply_overrides(RunConfig& c, const ConfigOverrides& o) {
  if (o.seed) {
    // A rubric seed that was derived follows the new seed; an explicit one stays.
    if (c.rubric.proposal.seed == derived_seed(c.seed, "rubric")) c.rubric.proposal.seed = derived_seed(*o.seed, "rubric");
    c.seed = *o.seed;
  }
  if (o.output_dir) c.output_dir = fs::absolute(*o.output_dir);
  if (o.cache_dir) c.cache_dir = fs::absolute(*o.cache_dir);
  if (o.judges) {
    std::set<std::string> wanted(o.judges->begin(), o.judges->end());
    for (const auto& name : wanted) {
      if (std::none_of(c.judges.begin(), c.judges.end(), [&](const JudgeSpec& s) { return s.name == name; })) {
        throw ConfigError("--judges", "no judge named " + name + " in the roster");
      }
    }
    std::erase_if(c.judges, [&](const JudgeSpec& s) { return !wanted.contains(s.name); });
  }
}

}  // namespace judgealign
