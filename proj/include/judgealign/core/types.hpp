#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "judgealign/core/error.hpp"

namespace judgealign {

using json = nlohmann::json;

enum class Modality { completion, chat, edit };

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::completion: return "completion";
    case Modality::chat: return "chat";
    case Modality::edit: return "edit";
  }
  return "completion";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "completion") return Modality::completion;
  if (s == "chat") return Modality::chat;
  if (s == "edit") return Modality::edit;
  throw UnknownModality("unknown modality '" + std::string(s) + "'");
}

// Which candidate a decision favours. The numeric value is the canonical
// label: +1 means response A, -1 means response B.
enum class Side : std::int8_t { a = 1, b = -1 };

inline int label(Side s) { return static_cast<int>(s); }
inline Side negate(Side s) { return s == Side::a ? Side::b : Side::a; }
inline Side side_from_label(int v) {
  if (v == 1) return Side::a;
  if (v == -1) return Side::b;
  throw FormatError("label must be +1 or -1, got " + std::to_string(v));
}

// Context shown to the judge. Absent (nullopt) differs from present-but-empty:
// a completion at end of file has an empty suffix, not a missing one.
struct ContextBundle {
  std::optional<std::string> prefix;
  std::optional<std::string> suffix;
  std::optional<std::string> code_to_edit;
  std::optional<std::string> instruction;
  std::optional<std::string> prompt;

  bool operator==(const ContextBundle&) const = default;
};

struct PreferencePair {
  std::string id;
  Modality modality = Modality::completion;
  ContextBundle context;
  std::string response_a;
  std::string response_b;
  Side winner = Side::a;

  bool operator==(const PreferencePair&) const = default;
};

// Same pair with the candidates exchanged and the label negated.
inline PreferencePair swapped(PreferencePair p) {
  std::swap(p.response_a, p.response_b);
  p.winner = negate(p.winner);
  return p;
}

namespace detail {
inline void put_optional(json& j, const char* key, const std::optional<std::string>& v) {
  if (v) j[key] = *v;
}
inline std::optional<std::string> get_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}
}  // namespace detail

inline void to_json(json& j, const PreferencePair& p) {
  j = json::object();
  j["id"] = p.id;
  j["modality"] = std::string(to_string(p.modality));
  detail::put_optional(j, "prefix", p.context.prefix);
  detail::put_optional(j, "suffix", p.context.suffix);
  detail::put_optional(j, "code_to_edit", p.context.code_to_edit);
  detail::put_optional(j, "instruction", p.context.instruction);
  detail::put_optional(j, "prompt", p.context.prompt);
  j["response_a"] = p.response_a;
  j["response_b"] = p.response_b;
  j["winner"] = label(p.winner);
}

inline void from_json(const json& j, PreferencePair& p) {
  p.id = j.at("id").get<std::string>();
  p.modality = parse_modality(j.at("modality").get<std::string>());
  p.context.prefix = detail::get_optional(j, "prefix");
  p.context.suffix = detail::get_optional(j, "suffix");
  p.context.code_to_edit = detail::get_optional(j, "code_to_edit");
  p.context.instruction = detail::get_optional(j, "instruction");
  p.context.prompt = detail::get_optional(j, "prompt");
  p.response_a = j.at("response_a").get<std::string>();
  p.response_b = j.at("response_b").get<std::string>();
  p.winner = side_from_label(j.at("winner").get<int>());
}

}  // namespace judgealign
