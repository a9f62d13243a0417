#pragma once

#include <algorithm>
#include <map>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "judgealign/core/builtin_templates.hpp"
#include "judgealign/core/random.hpp"
#include "judgealign/core/text.hpp"
#include "judgealign/judging/judge.hpp"
#include "judgealign/rubric/types.hpp"

namespace judgealign {

// Prompt texts for rubric discovery and scoring. Defaults are the shipped
// templates; a directory may override any of them by file name.
struct RubricTemplates {
  std::string proposer{builtin::proposer_txt};
  std::string aggregator{builtin::aggregator_txt};
  std::string annotator_proposer{builtin::annotator_proposer_txt};
  PromptTemplate scorer = parse_prompt_template(builtin::scorer_yaml);

  static RubricTemplates from_directory(const fs::path& dir) {
    RubricTemplates t;
    auto load = [&](const char* file, std::string& slot) {
      if (fs::exists(dir / file)) slot = read_file(dir / file);
    };
    load("proposer.txt", t.proposer);
    load("aggregator.txt", t.aggregator);
    load("annotator_proposer.txt", t.annotator_proposer);
    if (fs::exists(dir / "scorer.yaml")) t.scorer = load_prompt_template(dir / "scorer.yaml");
    return t;
  }
};

inline constexpr std::string_view kNoDifferences = "No differences found.";

struct ParsedAxes {
  std::vector<RubricItem> items;
  std::size_t skipped = 0;
};

namespace detail {

inline bool is_bullet(std::string_view line) {
  const auto t = text::trim(line);
  return t.size() >= 2 && (t[0] == '-' || t[0] == '*') && text::is_space(t[1]);
}

inline std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : text::trim(s)) {
    if (text::is_space(c)) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

inline std::string strip_emphasis(std::string s) {
  while (s.size() >= 2 && ((s.front() == '*' && s.back() == '*') || (s.front() == '_' && s.back() == '_') ||
                           (s.front() == '`' && s.back() == '`'))) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(text::trim(s));
}

inline std::optional<RubricItem> match_axis(const std::string& entry) {
  static const std::regex re(R"(^[-*]\s+(.+?)\s*:\s*\**\s*High\s*(?:→|->)\s*(.+?)\s*\|\s*Low\s*(?:→|->)\s*(.+?)\s*$)");
  std::smatch m;
  if (!std::regex_match(entry, m, re)) return std::nullopt;
  RubricItem it{strip_emphasis(m[1].str()), std::string(text::trim(m[2].str())), std::string(text::trim(m[3].str())),
                Origin::llm};
  if (it.name.empty() || it.high.empty() || it.low.empty()) return std::nullopt;
  return it;
}

}  // namespace detail

// Reads "- name: High → ... | Low → ..." bullets ("*" bullets and "->"
// arrows also accepted). Non-blank lines directly after a bullet are
// wrapped text and join it. The no-differences sentinel yields no items;
// every other entry that does not form an axis counts as skipped.
inline ParsedAxes parse_axes(std::string_view output) {
  ParsedAxes out;
  const auto lines = text::split_lines(text::normalize_newlines(output));
  std::vector<std::string> entries;
  bool open = false;  // last entry is a bullet that may continue
  for (const auto& raw : lines) {
    const auto line = text::trim(raw);
    if (line.empty()) {
      open = false;
      continue;
    }
    if (detail::is_bullet(line)) {
      entries.push_back(detail::collapse_spaces(line));
      open = true;
    } else if (open) {
      entries.back() += " " + detail::collapse_spaces(line);
    } else {
      entries.push_back(std::string(line));
    }
  }
  for (const auto& e : entries) {
    if (auto it = detail::match_axis(e)) {
      out.items.push_back(std::move(*it));
    } else if (detail::collapse_spaces(e) != kNoDifferences) {
      ++out.skipped;
    }
  }
  return out;
}

inline std::string format_axis(const RubricItem& it) { return "- " + it.name + ": High → " + it.high + " | Low → " + it.low; }

inline std::string format_axes(std::span<const RubricItem> items) {
  std::string out;
  for (const auto& it : items) out += format_axis(it) + "\n";
  return out;
}

// One line per axis in the form the aggregation prompt describes.
inline std::string format_for_aggregation(std::span<const RubricItem> items) {
  std::string out;
  for (const auto& it : items) out += it.name + ": High: " + it.high + " Low: " + it.low + "\n";
  return out;
}

namespace detail {

// One chat call retried on transport failure; the last failure propagates.
inline std::string call_with_retries(const JudgeSpec& spec, ChatClient& client, const std::string& system,
                                     const std::string& user) {
  for (int attempt = 0;; ++attempt) {
    try {
      return client.complete(
          {spec.model, system, user, spec.decoding.temperature, spec.decoding.max_tokens, attempt});
    } catch (const TransportError&) {
      if (attempt + 1 >= spec.max_attempts) throw;
    }
  }
}

inline std::string combined_responses(std::span<const PreferencePair* const> batch) {
  std::string out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& p = *batch[i];
    if (i) out += "\n\n";
    out += "Question " + std::to_string(i + 1) + ":\n" + context_text(p) + "\n\nModel A response:\n" + p.response_a +
           "\n\nModel B response:\n" + p.response_b;
  }
  return out;
}

}  // namespace detail

struct ProposalConfig {
  std::size_t passes = 3;
  std::size_t samples_per_pass = 30;
  std::size_t batch_size = 5;
  std::uint64_t seed = 0;

  std::size_t calls_for(std::size_t available) const {
    const std::size_t n = std::min(samples_per_pass, available);
    return passes * ((n + batch_size - 1) / batch_size);
  }
};

// Each pass draws `samples_per_pass` pairs uniformly without replacement
// (all pairs, shuffled, when fewer are available) from its own seeded stream
// and sends them to the proposer in batches. Returns the raw outputs in
// (pass, batch) order.
inline std::vector<std::string> propose_axes(std::span<const PreferencePair> pairs, const JudgeSpec& proposer,
                                             ChatClient& client, const ProposalConfig& cfg,
                                             const RubricTemplates& templates = {}) {
  if (cfg.batch_size == 0 || cfg.passes == 0 || cfg.samples_per_pass == 0) {
    throw InvalidConfig("proposal passes, samples_per_pass and batch_size must be positive");
  }
  if (pairs.size() < cfg.batch_size) {
    throw InsufficientSamples("proposal needs at least " + std::to_string(cfg.batch_size) + " pairs, got " +
                              std::to_string(pairs.size()));
  }
  std::vector<std::string> outputs;
  for (std::size_t pass = 0; pass < cfg.passes; ++pass) {
    Rng rng(cfg.seed, pass);
    std::vector<const PreferencePair*> pool;
    for (const auto& p : pairs) pool.push_back(&p);
    const std::size_t take = std::min(cfg.samples_per_pass, pool.size());
    for (std::size_t i = 0; i < take; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    for (std::size_t b = 0; b < take; b += cfg.batch_size) {
      const std::span<const PreferencePair* const> batch(pool.data() + b, std::min(cfg.batch_size, take - b));
      const std::string prompt =
          fill_placeholders(templates.proposer, {{"combined_responses", detail::combined_responses(batch)}});
      outputs.push_back(detail::call_with_retries(proposer, client, "", prompt));
    }
  }
  return outputs;
}

// Human rubric candidates from free-text annotator comments, `batch_size`
// comments per proposer call.
inline ParsedAxes propose_from_comments(std::span<const std::string> comments, const JudgeSpec& proposer,
                                        ChatClient& client, std::size_t batch_size = 20,
                                        const RubricTemplates& templates = {}) {
  if (comments.empty()) throw InsufficientSamples("no annotator comments");
  if (batch_size == 0) throw InvalidConfig("comment batch_size must be positive");
  ParsedAxes out;
  for (std::size_t b = 0; b < comments.size(); b += batch_size) {
    std::string listed;
    for (std::size_t i = b; i < std::min(comments.size(), b + batch_size); ++i) listed += "- " + comments[i] + "\n";
    auto parsed = parse_axes(
        detail::call_with_retries(proposer, client, "", fill_placeholders(templates.annotator_proposer, {{"comments", listed}})));
    out.skipped += parsed.skipped;
    for (auto& it : parsed.items) {
      it.origin = Origin::human;
      out.items.push_back(std::move(it));
    }
  }
  return out;
}

// Reduces overlapping axes with the aggregation prompt. Output origins: the
// common origin when all inputs share one; otherwise an output keeping an
// input's exact name inherits that input's origin and anything else is
// merged. Repeated output names keep their first occurrence.
inline std::vector<RubricItem> aggregate_axes(std::span<const RubricItem> items, const JudgeSpec& aggregator,
                                              ChatClient& client, const RubricTemplates& templates = {}) {
  if (items.empty()) throw PreconditionError("aggregate_axes needs at least one item");
  const std::string prompt = fill_placeholders(templates.aggregator, {{"differences", format_for_aggregation(items)}});
  auto parsed = parse_axes(detail::call_with_retries(aggregator, client, "", prompt));
  if (parsed.items.empty()) throw EmptyAggregation("aggregator returned no parseable axes");

  const bool uniform =
      std::all_of(items.begin(), items.end(), [&](const RubricItem& it) { return it.origin == items.front().origin; });
  std::map<std::string, Origin> by_name;
  for (const auto& it : items) {
    auto [pos, fresh] = by_name.emplace(text::to_lower(it.name), it.origin);
    if (!fresh && pos->second != it.origin) pos->second = Origin::merged;
  }
  std::vector<RubricItem> out;
  std::set<std::string> seen;
  for (auto& it : parsed.items) {
    if (!seen.insert(it.name).second) continue;
    if (uniform) {
      it.origin = items.front().origin;
    } else {
      auto f = by_name.find(text::to_lower(it.name));
      it.origin = f == by_name.end() ? Origin::merged : f->second;
    }
    out.push_back(std::move(it));
  }
  return out;
}

// Combines the LLM rubric with human items. With no human items the LLM
// rubric is returned unchanged and no call is made.
inline Rubric merge_rubrics(const Rubric& llm, std::span<const RubricItem> human, const JudgeSpec& aggregator,
                            ChatClient& client, const RubricTemplates& templates = {}) {
  llm.validate();
  if (human.empty()) return llm;
  std::vector<RubricItem> all = llm.items;
  for (auto it : human) {
    it.origin = Origin::human;
    all.push_back(std::move(it));
  }
  Rubric out;
  out.modality = llm.modality;
  out.items = aggregate_axes(all, aggregator, client, templates);
  out.provenance = llm.provenance;
  out.provenance["human_items"] = human.size();
  out.provenance["merged_from"] = all.size();
  out.validate();
  return out;
}

// Full discovery for one modality: propose, parse, aggregate.
inline Rubric discover_rubric(std::span<const PreferencePair> pairs, Modality modality, const JudgeSpec& proposer,
                              const JudgeSpec& aggregator, ChatClient& client, const ProposalConfig& cfg,
                              const RubricTemplates& templates = {}) {
  const auto raw = propose_axes(pairs, proposer, client, cfg, templates);
  std::vector<RubricItem> proposed;
  std::size_t skipped = 0;
  for (const auto& r : raw) {
    auto parsed = parse_axes(r);
    skipped += parsed.skipped;
    for (auto& it : parsed.items) proposed.push_back(std::move(it));
  }
  if (proposed.empty()) throw EmptyAggregation("proposer returned no parseable axes");
  Rubric out;
  out.modality = modality;
  out.items = aggregate_axes(proposed, aggregator, client, templates);
  out.provenance = json{{"passes", cfg.passes},
                        {"samples_per_pass", cfg.samples_per_pass},
                        {"batch_size", cfg.batch_size},
                        {"seed", cfg.seed},
                        {"proposer_calls", raw.size()},
                        {"proposed_items", proposed.size()},
                        {"skipped_lines", skipped},
                        {"proposer_prompt_sha256", sha256_hex(templates.proposer)},
                        {"aggregator_prompt_sha256", sha256_hex(templates.aggregator)}};
  out.validate();
  return out;
}

}  // namespace judgealign
