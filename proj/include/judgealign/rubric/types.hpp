#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "judgealign/core/error.hpp"
#include "judgealign/core/io.hpp"
#include "judgealign/core/types.hpp"

namespace judgealign {

enum class Origin { llm, human, merged };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::llm: return "llm";
    case Origin::human: return "human";
    case Origin::merged: return "merged";
  }
  return "llm";
}

inline Origin parse_origin(std::string_view s) {
  if (s == "llm") return Origin::llm;
  if (s == "human") return Origin::human;
  if (s == "merged") return Origin::merged;
  throw FormatError("unknown rubric item origin '" + std::string(s) + "'");
}

struct RubricItem {
  std::string name;
  std::string high;
  std::string low;
  Origin origin = Origin::llm;

  bool operator==(const RubricItem&) const = default;
};

struct Rubric {
  Modality modality = Modality::completion;
  std::vector<RubricItem> items;
  json provenance = json::object();

  void validate() const {
    if (items.empty()) throw EmptyRubric("rubric has no items");
    std::set<std::string> seen;
    for (const auto& it : items) {
      if (it.name.empty() || it.high.empty() || it.low.empty()) {
        throw FormatError("rubric item '" + it.name + "' has an empty field");
      }
      if (!seen.insert(it.name).second) throw FormatError("duplicate rubric item '" + it.name + "'");
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& it : items) out.push_back(it.name);
    return out;
  }
};

inline void to_json(json& j, const RubricItem& it) {
  j = json{{"name", it.name}, {"high", it.high}, {"low", it.low}, {"origin", to_string(it.origin)}};
}

inline void from_json(const json& j, RubricItem& it) {
  it.name = j.at("name").get<std::string>();
  it.high = j.at("high").get<std::string>();
  it.low = j.at("low").get<std::string>();
  it.origin = parse_origin(j.value("origin", "llm"));
}

inline void to_json(json& j, const Rubric& r) {
  j = json{{"modality", to_string(r.modality)}, {"items", r.items}, {"provenance", r.provenance}};
}

inline void from_json(const json& j, Rubric& r) {
  r.modality = parse_modality(j.at("modality").get<std::string>());
  r.items = j.at("items").get<std::vector<RubricItem>>();
  r.provenance = j.value("provenance", json::object());
}

// Pairs x items ternary matrix. Entries use the scorer's encoding: -1 when
// response A better satisfies the item, +1 when B does, 0 when neither.
// `masked` marks zeros forced by inconsistent or failed scoring.
struct ScoreMatrix {
  std::vector<std::string> pair_ids;
  std::vector<std::string> item_names;
  std::vector<std::int8_t> scores;  // row-major
  std::vector<std::uint8_t> masked;

  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> pairs, std::vector<std::string> items)
      : pair_ids(std::move(pairs)),
        item_names(std::move(items)),
        scores(pair_ids.size() * item_names.size(), 0),
        masked(pair_ids.size() * item_names.size(), 0) {}

  std::size_t rows() const { return pair_ids.size(); }
  std::size_t cols() const { return item_names.size(); }

  int score(std::size_t r, std::size_t c) const { return scores[r * cols() + c]; }
  bool is_masked(std::size_t r, std::size_t c) const { return masked[r * cols() + c] != 0; }

  void set(std::size_t r, std::size_t c, int s, bool mask = false) {
    scores[r * cols() + c] = static_cast<std::int8_t>(mask ? 0 : s);
    masked[r * cols() + c] = mask ? 1 : 0;
  }

  void validate() const {
    if (scores.size() != rows() * cols() || masked.size() != scores.size()) {
      throw DimensionMismatch("score matrix storage does not match its dimensions");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] < -1 || scores[i] > 1) throw FormatError("score matrix entry outside {-1,0,+1}");
      if (masked[i] && scores[i] != 0) throw FormatError("masked score matrix entry is nonzero");
    }
  }

  bool operator==(const ScoreMatrix&) const = default;
};

inline void to_json(json& j, const ScoreMatrix& m) {
  json rows = json::array(), masks = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array(), mrow = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      row.push_back(m.score(r, c));
      mrow.push_back(m.is_masked(r, c));
    }
    rows.push_back(std::move(row));
    masks.push_back(std::move(mrow));
  }
  j = json{{"pair_ids", m.pair_ids}, {"item_names", m.item_names}, {"scores", rows}, {"masked", masks}};
}

inline void from_json(const json& j, ScoreMatrix& m) {
  m = ScoreMatrix(j.at("pair_ids").get<std::vector<std::string>>(), j.at("item_names").get<std::vector<std::string>>());
  const auto& rows = j.at("scores");
  const auto& masks = j.at("masked");
  if (rows.size() != m.rows() || masks.size() != m.rows()) throw DimensionMismatch("score matrix row count");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (rows[r].size() != m.cols() || masks[r].size() != m.cols()) throw DimensionMismatch("score matrix row width");
    for (std::size_t c = 0; c < m.cols(); ++c) {
      m.scores[r * m.cols() + c] = static_cast<std::int8_t>(rows[r][c].get<int>());
      m.masked[r * m.cols() + c] = masks[r][c].get<bool>() ? 1 : 0;
    }
  }
  m.validate();
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

// Columnar form: one line per (pair, item) in matrix order.
inline std::string score_matrix_csv(const ScoreMatrix& m) {
  std::string out = "pair_id,item,score,masked\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out += detail::csv_field(m.pair_ids[r]) + "," + detail::csv_field(m.item_names[c]) + "," +
             std::to_string(m.score(r, c)) + "," + (m.is_masked(r, c) ? "1" : "0") + "\n";
    }
  }
  return out;
}

// Rebuilds a matrix from its columnar form. Row and column order follow
// first appearance; every (pair, item) cell must be present exactly once.
inline ScoreMatrix parse_score_matrix_csv(std::string_view text) {
  const auto rows = detail::parse_csv(text);
  if (rows.empty() || rows[0] != std::vector<std::string>{"pair_id", "item", "score", "masked"}) {
    throw FormatError("score matrix CSV header must be pair_id,item,score,masked");
  }
  std::vector<std::string> pairs, items;
  std::map<std::string, std::size_t> pi, ii;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].size() != 4) throw FormatError("score matrix CSV line " + std::to_string(k + 1) + " needs 4 fields");
    if (pi.emplace(rows[k][0], pairs.size()).second) pairs.push_back(rows[k][0]);
    if (ii.emplace(rows[k][1], items.size()).second) items.push_back(rows[k][1]);
  }
  ScoreMatrix m(pairs, items);
  std::vector<std::uint8_t> seen(m.scores.size(), 0);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const std::size_t idx = pi[rows[k][0]] * m.cols() + ii[rows[k][1]];
    if (seen[idx]++) throw FormatError("duplicate score matrix cell " + rows[k][0] + "/" + rows[k][1]);
    int s = 0;
    try {
      s = std::stoi(rows[k][2]);
    } catch (const std::exception&) {
      throw FormatError("bad score on CSV line " + std::to_string(k + 1));
    }
    m.scores[idx] = static_cast<std::int8_t>(s);
    m.masked[idx] = rows[k][3] == "1" ? 1 : 0;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw FormatError("score matrix CSV is missing cells");
  m.validate();
  return m;
}

}  // namespace judgealign
