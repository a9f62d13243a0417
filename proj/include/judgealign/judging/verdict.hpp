#pragma once

#include <optional>
#include <string_view>

namespace judgealign {

enum class Position { a, b };

enum class VerdictStatus { ok, no_verdict, ambiguous };

struct ParsedVerdict {
  VerdictStatus status = VerdictStatus::no_verdict;
  std::optional<Position> position;

  bool ok() const { return status == VerdictStatus::ok; }
};

inline std::string_view to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::ok: return "ok";
    case VerdictStatus::no_verdict: return "no_verdict";
    case VerdictStatus::ambiguous: return "ambiguous";
  }
  return "no_verdict";
}

// Reads the verdict token from the last complete <answer>...</answer> region.
inline ParsedVerdict parse_verdict(std::string_view response) {
  constexpr std::string_view open = "<answer>";
  constexpr std::string_view close = "</answer>";
  const std::size_t end = response.rfind(close);
  if (end == std::string_view::npos) return {};
  const std::size_t begin = response.rfind(open, end);
  if (begin == std::string_view::npos) return {};
  const std::string_view region = response.substr(begin + open.size(), end - begin - open.size());
  const bool has_a = region.find("[[A]]") != std::string_view::npos;
  const bool has_b = region.find("[[B]]") != std::string_view::npos;
  if (has_a && has_b) return {VerdictStatus::ambiguous, std::nullopt};
  if (has_a) return {VerdictStatus::ok, Position::a};
  if (has_b) return {VerdictStatus::ok, Position::b};
  return {};
}

}  // namespace judgealign
