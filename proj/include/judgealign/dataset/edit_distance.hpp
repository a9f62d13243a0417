#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "judgealign/core/text.hpp"
#include "judgealign/core/types.hpp"

namespace judgealign {

// Levenshtein distance between two token sequences (unit costs).
template <typename T>
std::size_t levenshtein(const std::vector<T>& a, const std::vector<T>& b) {
  const std::vector<T>& shorter = a.size() < b.size() ? a : b;
  const std::vector<T>& longer = a.size() < b.size() ? b : a;
  std::vector<std::size_t> row(shorter.size() + 1);
  for (std::size_t j = 0; j <= shorter.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= longer.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t cost = longer[i - 1] == shorter[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = above;
    }
  }
  return row[shorter.size()];
}

// Line-level Levenshtein distance after newline normalization.
inline std::size_t line_edit_distance(std::string_view a, std::string_view b) {
  // Intern lines so the DP compares integers.
  std::unordered_map<std::string, std::size_t> ids;
  auto intern = [&](std::string_view s) {
    std::vector<std::size_t> out;
    for (auto& line : text::split_lines(s)) {
      out.push_back(ids.emplace(std::move(line), ids.size()).first->second);
    }
    return out;
  };
  const auto la = intern(a);
  const auto lb = intern(b);
  return levenshtein(la, lb);
}

// Distance between the two candidates of a pair. Chat responses are compared
// on their concatenated fenced code when they contain any.
inline std::size_t pair_edit_distance(const PreferencePair& p) {
  if (p.modality == Modality::chat) {
    return line_edit_distance(text::code_or_text(p.response_a), text::code_or_text(p.response_b));
  }
  return line_edit_distance(p.response_a, p.response_b);
}

}  // namespace judgealign
