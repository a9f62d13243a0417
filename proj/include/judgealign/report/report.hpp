#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "judgealign/core/io.hpp"
#include "judgealign/metrics/accuracy.hpp"
#include "judgealign/prefstats/meta.hpp"

namespace judgealign {

// Items x judges grid of judge-level misalignment, with the per-item pooled
// test alongside. Positive delta: the judge weights the item more than
// humans do.
struct HeatmapTable {
  Modality modality = Modality::completion;
  std::vector<std::string> judges;
  std::vector<std::string> items;
  std::vector<std::vector<MisalignmentCell>> cells;  // [item][judge]
  std::map<std::string, PooledEstimate> pooled;      // by item; may be partial
};

// Arranges cells into a grid. Judge and item order follow first appearance.
// Every (item, judge) combination must be present exactly once.
inline HeatmapTable build_heatmap(std::span<const MisalignmentCell> cells, std::span<const PooledEstimate> pooled,
                                  Modality modality) {
  HeatmapTable t;
  t.modality = modality;
  std::map<std::string, std::size_t> ji, ii;
  for (const auto& c : cells) {
    if (ji.emplace(c.judge, t.judges.size()).second) t.judges.push_back(c.judge);
    if (ii.emplace(c.item, t.items.size()).second) t.items.push_back(c.item);
  }
  std::vector<std::vector<std::optional<MisalignmentCell>>> grid(t.items.size(),
                                                                  std::vector<std::optional<MisalignmentCell>>(t.judges.size()));
  std::vector<std::string> problems;
  for (const auto& c : cells) {
    if (!std::isfinite(c.delta)) throw PreconditionError("non-finite delta for " + c.judge + "/" + c.item);
    auto& slot = grid[ii[c.item]][ji[c.judge]];
    if (slot) problems.push_back(c.judge + "/" + c.item + " (duplicate)");
    slot = c;
  }
  for (std::size_t i = 0; i < t.items.size(); ++i) {
    for (std::size_t j = 0; j < t.judges.size(); ++j) {
      if (!grid[i][j]) problems.push_back(t.judges[j] + "/" + t.items[i]);
    }
  }
  for (const auto& p : pooled) {
    if (!ii.contains(p.item)) problems.push_back("pooled/" + p.item);
    t.pooled[p.item] = p;
  }
  if (t.items.empty()) problems.push_back("(no cells)");
  if (!problems.empty()) throw IncompleteGrid(std::move(problems));
  for (auto& row : grid) {
    t.cells.emplace_back();
    for (auto& c : row) t.cells.back().push_back(std::move(*c));
  }
  return t;
}

inline constexpr std::string_view kHeatmapHeader =
    "judge,modality,item,delta,ci_lower,ci_upper,judge_flagged,pooled,pooled_se,z,pooled_flagged";

// Long form, one line per (judge, item), judge-major. Pooled columns are
// blank for items that were not pooled.
inline std::string heatmap_csv(const HeatmapTable& t, int decimals = 6) {
  std::string out(kHeatmapHeader);
  out += "\n";
  for (std::size_t j = 0; j < t.judges.size(); ++j) {
    for (std::size_t i = 0; i < t.items.size(); ++i) {
      const auto& c = t.cells[i][j];
      out += detail::csv_field(t.judges[j]) + "," + std::string(to_string(t.modality)) + "," +
             detail::csv_field(t.items[i]) + "," + format_fixed(c.delta, decimals) + "," +
             format_fixed(c.judge_ci.lower, decimals) + "," + format_fixed(c.judge_ci.upper, decimals) + "," +
             (c.flagged ? "1" : "0") + ",";
      if (auto p = t.pooled.find(t.items[i]); p != t.pooled.end()) {
        out += format_fixed(p->second.pooled, decimals) + "," + format_fixed(p->second.pooled_se, decimals) + "," +
               format_fixed(p->second.z, decimals) + "," + (p->second.significant ? "1" : "0");
      } else {
        out += ",,,";
      }
      out += "\n";
    }
  }
  return out;
}

inline json heatmap_json(const HeatmapTable& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.items.size(); ++i) rows.push_back(t.cells[i]);
  json pooled = json::array();
  for (const auto& item : t.items) {
    if (auto p = t.pooled.find(item); p != t.pooled.end()) pooled.push_back(p->second);
  }
  return json{{"modality", to_string(t.modality)}, {"judges", t.judges}, {"items", t.items},
              {"cells", rows}, {"pooled", pooled}};
}

inline HeatmapTable heatmap_from_json(const json& j) {
  std::vector<MisalignmentCell> cells;
  for (const auto& row : j.at("cells"))
    for (const auto& c : row) cells.push_back(c.get<MisalignmentCell>());
  const auto pooled = j.at("pooled").get<std::vector<PooledEstimate>>();
  auto t = build_heatmap(cells, pooled, parse_modality(j.at("modality").get<std::string>()));
  // Judge order is stored explicitly; cells were read item-major.
  if (t.judges != j.at("judges").get<std::vector<std::string>>() ||
      t.items != j.at("items").get<std::vector<std::string>>()) {
    throw FormatError("heatmap JSON axes do not match its cells");
  }
  return t;
}

// Writes <stem>.csv and <stem>.json.
inline HeatmapTable emit_heatmap(std::span<const MisalignmentCell> cells, std::span<const PooledEstimate> pooled,
                                 Modality modality, const fs::path& stem) {
  auto t = build_heatmap(cells, pooled, modality);
  fs::create_directories(stem.parent_path());
  atomic_write_file(fs::path(stem.string() + ".csv"), heatmap_csv(t));
  write_json(fs::path(stem.string() + ".json"), heatmap_json(t));
  return t;
}

struct AccuracyRow {
  std::string judge;
  Modality modality = Modality::completion;
  AccuracySummary summary;
  std::optional<ContextSplit> split;
};

inline constexpr std::string_view kAccuracyHeader = "judge,modality,acc,acc_pc,consistency_rate,acc_fits,acc_trunc";

inline std::string percent(std::optional<double> v) { return v ? format_fixed(100.0 * *v, 2) : std::string(); }

// Percentages with two decimals; absent values are blank.
inline std::string accuracy_csv(std::span<const AccuracyRow> rows) {
  std::string out(kAccuracyHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += detail::csv_field(r.judge) + "," + std::string(to_string(r.modality)) + "," + percent(r.summary.acc) + "," +
           percent(r.summary.acc_pc) + "," + percent(r.summary.consistency_rate) + "," +
           percent(r.split ? r.split->acc_fits : std::nullopt) + "," +
           percent(r.split ? r.split->acc_truncated : std::nullopt) + "\n";
  }
  return out;
}

inline json accuracy_json(std::span<const AccuracyRow> rows) {
  json out = json::array();
  auto opt = [](std::optional<double> v) { return v ? json(*v) : json(nullptr); };
  for (const auto& r : rows) {
    json j{{"judge", r.judge},
           {"modality", to_string(r.modality)},
           {"n_total", r.summary.n_total},
           {"n_consistent", r.summary.n_consistent},
           {"n_consistent_correct", r.summary.n_consistent_correct},
           {"n_correct", r.summary.n_correct},
           {"acc", r.summary.acc},
           {"acc_pc", opt(r.summary.acc_pc)},
           {"consistency_rate", r.summary.consistency_rate}};
    if (r.split) {
      j["acc_fits"] = opt(r.split->acc_fits);
      j["acc_trunc"] = opt(r.split->acc_truncated);
    }
    out.push_back(std::move(j));
  }
  return out;
}

// Writes <stem>.csv and <stem>.json.
inline void emit_accuracy_table(std::span<const AccuracyRow> rows, const fs::path& stem) {
  if (rows.empty()) throw PreconditionError("accuracy table needs at least one summary");
  fs::create_directories(stem.parent_path());
  atomic_write_file(fs::path(stem.string() + ".csv"), accuracy_csv(rows));
  write_json(fs::path(stem.string() + ".json"), accuracy_json(rows));
}

}  // namespace judgealign
