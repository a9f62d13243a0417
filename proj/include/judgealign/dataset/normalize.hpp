#pragma once

#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "judgealign/core/io.hpp"
#include "judgealign/core/text.hpp"
#include "judgealign/core/types.hpp"

namespace judgealign {

// Maps canonical field names to source column names for one modality.
//
//   completion: id, prefix, suffix, completions, accepted_index
//   chat:       id, is_code, winner, conversation_a, conversation_b
//   edit:       id, instruction, code_to_edit, prefix, suffix, candidates,
//               consent, preference
class FieldMap {
 public:
  static FieldMap defaults(Modality m) {
    FieldMap f;
    switch (m) {
      case Modality::completion:
        f.columns_ = {{"id", "id"},
                      {"prefix", "prefix"},
                      {"suffix", "suffix"},
                      {"completions", "completions"},
                      {"accepted_index", "accepted_index"}};
        break;
      case Modality::chat:
        f.columns_ = {{"id", "question_id"},
                      {"is_code", "is_code"},
                      {"winner", "winner"},
                      {"conversation_a", "conversation_a"},
                      {"conversation_b", "conversation_b"}};
        break;
      case Modality::edit:
        f.columns_ = {{"id", "id"},
                      {"instruction", "instruction"},
                      {"code_to_edit", "code_to_edit"},
                      {"prefix", "prefix"},
                      {"suffix", "suffix"},
                      {"candidates", "candidates"},
                      {"consent", "research_consent"},
                      {"preference", "preference"}};
        break;
    }
    return f;
  }

  // Defaults overridden by a JSON object {canonical: source_column}.
  static FieldMap from_json(Modality m, const json& overrides) {
    FieldMap f = defaults(m);
    if (overrides.is_null()) return f;
    if (!overrides.is_object()) throw InvalidConfig("field map must be a JSON object");
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
      if (!f.columns_.contains(it.key())) {
        throw InvalidConfig("unknown canonical field '" + it.key() + "' for modality " +
                            std::string(to_string(m)));
      }
      f.columns_[it.key()] = it.value().get<std::string>();
    }
    return f;
  }

  const std::string& column(const std::string& canonical) const { return columns_.at(canonical); }

 private:
  std::map<std::string, std::string> columns_;
};

// Filters that isolate code-editing conversations in the chat source.
struct ChatFilterConfig {
  std::vector<std::string> edit_like_patterns;
  std::vector<std::string> exclude_patterns;
  std::string code_token_pattern;
  std::map<std::string, std::string> language_aliases;  // tag -> canonical name
  std::optional<std::set<std::string>> allowlist;

  static ChatFilterConfig defaults() {
    ChatFilterConfig c;
    c.edit_like_patterns = {
        R"(\b(fix|fixe[sd]|debug|refactor|rewrite|modify|update|change|edit|add|remove|replace|implement|convert|optimi[sz]e|improve|complete|correct|repair|clean ?up|rename|port|translate)\b)",
        R"((TODO|FIXME|\.\.\.|<placeholder>|\?\?\?|your code here|insert code))",
    };
    c.exclude_patterns = {
        R"(^\s*(what is|what are|what's|explain|define|describe|why|who|tell me about)\b)",
        R"(\b(image|picture|photo|drawing|logo|illustration)\b)",
    };
    c.code_token_pattern =
        R"([;{}()\[\]=<>]|\b(def|return|function|class|import|const|let|var|int|void|public|if|for|while|fn|func|package|select|from)\b)";
    c.language_aliases = {
        {"python", "python"},   {"py", "python"},         {"python3", "python"},
        {"javascript", "javascript"}, {"js", "javascript"}, {"jsx", "javascript"},
        {"typescript", "typescript"}, {"ts", "typescript"}, {"tsx", "typescript"},
        {"java", "java"},       {"c", "c"},               {"cpp", "cpp"},
        {"c++", "cpp"},         {"cc", "cpp"},            {"cxx", "cpp"},
        {"csharp", "csharp"},   {"cs", "csharp"},         {"c#", "csharp"},
        {"go", "go"},           {"golang", "go"},         {"rust", "rust"},
        {"rs", "rust"},         {"ruby", "ruby"},         {"rb", "ruby"},
        {"php", "php"},         {"swift", "swift"},       {"kotlin", "kotlin"},
        {"kt", "kotlin"},       {"scala", "scala"},       {"sql", "sql"},
        {"bash", "bash"},       {"sh", "bash"},           {"shell", "bash"},
        {"zsh", "bash"},        {"powershell", "powershell"}, {"ps1", "powershell"},
        {"html", "html"},       {"css", "css"},           {"scss", "css"},
        {"json", "json"},       {"yaml", "yaml"},         {"yml", "yaml"},
        {"xml", "xml"},         {"r", "r"},               {"matlab", "matlab"},
        {"lua", "lua"},         {"perl", "perl"},         {"haskell", "haskell"},
        {"hs", "haskell"},      {"dart", "dart"},         {"julia", "julia"},
        {"vb", "vb"},           {"vbnet", "vb"},          {"objective-c", "objective-c"},
        {"objc", "objective-c"}, {"elixir", "elixir"},    {"clojure", "clojure"},
        {"fortran", "fortran"}, {"assembly", "assembly"}, {"asm", "assembly"},
        {"solidity", "solidity"}, {"dockerfile", "dockerfile"}, {"makefile", "makefile"},
        {"vue", "vue"},         {"svelte", "svelte"},     {"groovy", "groovy"},
        {"ocaml", "ocaml"},     {"fsharp", "fsharp"},     {"erlang", "erlang"},
    };
    return c;
  }

  // Keys present in the JSON replace the corresponding defaults.
  static ChatFilterConfig from_json(const json& j) {
    ChatFilterConfig c = defaults();
    if (j.contains("edit_like_patterns")) c.edit_like_patterns = j["edit_like_patterns"].get<std::vector<std::string>>();
    if (j.contains("exclude_patterns")) c.exclude_patterns = j["exclude_patterns"].get<std::vector<std::string>>();
    if (j.contains("code_token_pattern")) c.code_token_pattern = j["code_token_pattern"].get<std::string>();
    if (j.contains("language_aliases")) {
      c.language_aliases = j["language_aliases"].get<std::map<std::string, std::string>>();
    }
    if (j.contains("allowlist")) c.allowlist = j["allowlist"].get<std::set<std::string>>();
    return c;
  }
};

struct NormalizeOptions {
  FieldMap field_map;
  ChatFilterConfig chat = ChatFilterConfig::defaults();
};

struct Reject {
  std::size_t line_no = 0;
  std::string id;
  std::string reason;
};

inline void to_json(json& j, const Reject& r) {
  j = json{{"id", r.id}, {"line", r.line_no}, {"reason", r.reason}};
}

struct NormalizeResult {
  std::vector<PreferencePair> pairs;
  std::vector<Reject> rejects;
};

// Thrown for a single raw record; converted to a Reject by normalize_dataset.
class RecordRejected : public Error {
 public:
  explicit RecordRejected(const std::string& reason) : Error(reason, reason) {}
};

namespace detail {

inline const json* field(const json& rec, const FieldMap& fm, const std::string& canonical) {
  auto it = rec.find(fm.column(canonical));
  if (it == rec.end() || it->is_null()) return nullptr;
  return &*it;
}

inline std::optional<std::string> string_field(const json& rec, const FieldMap& fm,
                                               const std::string& canonical) {
  const json* v = field(rec, fm, canonical);
  if (!v) return std::nullopt;
  if (!v->is_string()) throw RecordRejected("malformed_field:" + canonical);
  return v->get<std::string>();
}

inline std::string required_text(const json& rec, const FieldMap& fm, const std::string& canonical) {
  auto v = string_field(rec, fm, canonical);
  if (!v || text::trim(*v).empty()) throw RecordRejected("missing_field:" + canonical);
  return *v;
}

inline std::string record_id(const json& rec, const FieldMap& fm) {
  const json* v = field(rec, fm, "id");
  if (!v) return {};
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  return v->dump();
}

// A candidate list stored either as a JSON array or as a JSON-serialized
// string. Elements are strings or objects carrying the text under one of
// `keys`.
inline std::vector<std::string> candidate_list(const json& raw, std::initializer_list<const char*> keys) {
  json arr = raw;
  if (raw.is_string()) {
    arr = json::parse(raw.get<std::string>(), nullptr, false);
    if (arr.is_discarded()) throw RecordRejected("unparseable_candidates");
  }
  if (!arr.is_array()) throw RecordRejected("unparseable_candidates");
  std::vector<std::string> out;
  for (const auto& el : arr) {
    if (el.is_string()) {
      out.push_back(el.get<std::string>());
      continue;
    }
    bool found = false;
    if (el.is_object()) {
      for (const char* k : keys) {
        if (el.contains(k) && el[k].is_string()) {
          out.push_back(el[k].get<std::string>());
          found = true;
          break;
        }
      }
    }
    if (!found) throw RecordRejected("unparseable_candidates");
  }
  return out;
}

inline void require_distinct(const std::string& a, const std::string& b) {
  if (text::trim(a) == text::trim(b)) throw RecordRejected("identical_candidates");
}

inline PreferencePair normalize_completion(const json& rec, const FieldMap& fm) {
  PreferencePair p;
  p.modality = Modality::completion;
  const json* idx = field(rec, fm, "accepted_index");
  int accepted = -1;
  if (idx) {
    if (idx->is_number_integer()) {
      accepted = idx->get<int>();
    } else if (idx->is_string()) {
      const auto s = idx->get<std::string>();
      if (s == "0" || s == "1") accepted = s[0] - '0';
    }
  }
  if (accepted != 0 && accepted != 1) throw RecordRejected("no_preference");
  // Only acceptances of the second presented completion are kept.
  if (accepted == 0) throw RecordRejected("accepted_first");

  const json* raw = field(rec, fm, "completions");
  if (!raw) throw RecordRejected("missing_field:completions");
  const auto cands = candidate_list(*raw, {"completion", "text", "content"});
  if (cands.size() != 2) throw RecordRejected("unparseable_candidates");

  auto prefix = string_field(rec, fm, "prefix");
  if (!prefix || prefix->empty()) throw RecordRejected("missing_field:prefix");
  p.context.prefix = *prefix;
  p.context.suffix = string_field(rec, fm, "suffix").value_or("");
  p.response_a = cands[0];
  p.response_b = cands[1];
  require_distinct(p.response_a, p.response_b);
  p.winner = Side::b;
  return p;
}

struct ChatTurns {
  std::string prompt;
  std::string response;
};

inline ChatTurns single_turn(const json& conv) {
  json arr = conv;
  if (conv.is_string()) {
    arr = json::parse(conv.get<std::string>(), nullptr, false);
    if (arr.is_discarded()) throw RecordRejected("malformed_conversation");
  }
  if (!arr.is_array()) throw RecordRejected("malformed_conversation");
  if (arr.size() != 2) throw RecordRejected("multi_turn");
  auto content = [](const json& msg, const char* role) {
    if (!msg.is_object() || msg.value("role", "") != role) throw RecordRejected("multi_turn");
    const auto& c = msg.contains("content") ? msg["content"] : json();
    if (!c.is_string()) throw RecordRejected("malformed_conversation");
    return c.get<std::string>();
  };
  return {content(arr[0], "user"), content(arr[1], "assistant")};
}

class ChatFilter {
 public:
  explicit ChatFilter(const ChatFilterConfig& cfg) : cfg_(cfg) {
    const auto flags = std::regex::ECMAScript | std::regex::icase;
    for (const auto& p : cfg.edit_like_patterns) include_.emplace_back(p, flags);
    for (const auto& p : cfg.exclude_patterns) exclude_.emplace_back(p, flags);
    code_token_ = std::regex(cfg.code_token_pattern, flags);
  }

  bool edit_like(const std::string& prompt) const {
    bool inc = false;
    for (const auto& r : include_) inc = inc || std::regex_search(prompt, r);
    if (!inc) return false;
    for (const auto& r : exclude_) {
      if (std::regex_search(prompt, r)) return false;
    }
    return true;
  }

  // Canonical language tags of fenced blocks that hold code-like tokens.
  // Throws the specific drop reason when the response has none.
  std::set<std::string> code_languages(const std::string& response) const {
    const auto blocks = text::fenced_code_blocks(response);
    if (blocks.empty()) throw RecordRejected("missing_code_block");
    std::set<std::string> tagged;
    std::set<std::string> code;
    for (const auto& b : blocks) {
      auto it = cfg_.language_aliases.find(b.language);
      if (it == cfg_.language_aliases.end()) continue;
      tagged.insert(it->second);
      if (std::regex_search(b.body, code_token_)) code.insert(it->second);
    }
    if (tagged.empty()) throw RecordRejected("missing_language_tag");
    if (code.empty()) throw RecordRejected("prose_only_fence");
    return code;
  }

  const ChatFilterConfig& config() const { return cfg_; }

 private:
  const ChatFilterConfig& cfg_;
  std::vector<std::regex> include_;
  std::vector<std::regex> exclude_;
  std::regex code_token_;
};

inline bool truthy(const json* v) {
  if (!v) return false;
  if (v->is_boolean()) return v->get<bool>();
  if (v->is_number_integer()) return v->get<long long>() != 0;
  if (v->is_string()) {
    const auto s = text::to_lower(v->get<std::string>());
    return s == "true" || s == "1" || s == "yes";
  }
  return false;
}

inline PreferencePair normalize_chat(const json& rec, const FieldMap& fm, const ChatFilter& filter,
                                     const std::string& id) {
  PreferencePair p;
  p.modality = Modality::chat;
  if (!truthy(field(rec, fm, "is_code"))) throw RecordRejected("not_code");
  const auto winner = string_field(rec, fm, "winner");
  if (winner == "model_a") {
    p.winner = Side::a;
  } else if (winner == "model_b") {
    p.winner = Side::b;
  } else {
    throw RecordRejected("no_preference");
  }
  const json* ca = field(rec, fm, "conversation_a");
  const json* cb = field(rec, fm, "conversation_b");
  if (!ca) throw RecordRejected("missing_field:conversation_a");
  if (!cb) throw RecordRejected("missing_field:conversation_b");
  const ChatTurns a = single_turn(*ca);
  const ChatTurns b = single_turn(*cb);
  if (a.prompt != b.prompt) throw RecordRejected("prompt_mismatch");
  if (text::trim(a.prompt).empty()) throw RecordRejected("missing_field:prompt");
  if (!filter.edit_like(a.prompt)) throw RecordRejected("not_edit_like");
  const auto la = filter.code_languages(a.response);
  const auto lb = filter.code_languages(b.response);
  bool shared = false;
  for (const auto& l : la) shared = shared || lb.contains(l);
  if (!shared) throw RecordRejected("no_shared_language");
  if (filter.config().allowlist && !filter.config().allowlist->contains(id)) {
    throw RecordRejected("not_allowlisted");
  }
  p.context.prompt = a.prompt;
  p.response_a = a.response;
  p.response_b = b.response;
  require_distinct(p.response_a, p.response_b);
  return p;
}

inline PreferencePair normalize_edit(const json& rec, const FieldMap& fm) {
  PreferencePair p;
  p.modality = Modality::edit;
  const json* raw = field(rec, fm, "candidates");
  if (!raw) throw RecordRejected("missing_field:candidates");
  const auto cands = candidate_list(*raw, {"code", "edit", "text", "completion"});
  if (cands.size() != 2) throw RecordRejected("unparseable_candidates");
  if (!truthy(field(rec, fm, "consent"))) throw RecordRejected("no_consent");

  const json* pref = field(rec, fm, "preference");
  int choice = -1;
  if (pref) {
    if (pref->is_number_integer()) {
      const auto v = pref->get<long long>();
      if (v == 0 || v == 1) choice = static_cast<int>(v);
    } else if (pref->is_string()) {
      const auto s = text::to_lower(pref->get<std::string>());
      if (s == "first" || s == "a" || s == "0") choice = 0;
      if (s == "second" || s == "b" || s == "1") choice = 1;
    }
  }
  if (choice < 0) throw RecordRejected("no_preference");

  p.context.instruction = required_text(rec, fm, "instruction");
  p.context.code_to_edit = required_text(rec, fm, "code_to_edit");
  p.context.prefix = string_field(rec, fm, "prefix");
  p.context.suffix = string_field(rec, fm, "suffix");
  const bool has_file_context = (p.context.prefix && !text::trim(*p.context.prefix).empty()) ||
                                (p.context.suffix && !text::trim(*p.context.suffix).empty());
  if (!has_file_context) throw RecordRejected("missing_field:file_context");
  p.context.prefix = p.context.prefix.value_or("");
  p.context.suffix = p.context.suffix.value_or("");
  p.response_a = cands[0];
  p.response_b = cands[1];
  require_distinct(p.response_a, p.response_b);
  p.winner = choice == 0 ? Side::a : Side::b;
  return p;
}

}  // namespace detail

// Applies the modality's filters to raw source records. Per-record failures
// become rejects; only an empty survivor set is an error.
inline NormalizeResult normalize_records(Modality modality, std::span<const JsonLine> records,
                                         const NormalizeOptions& opts) {
  NormalizeResult out;
  detail::ChatFilter filter(opts.chat);
  std::unordered_set<std::string> seen;
  for (const auto& line : records) {
    if (line.value.is_discarded() || !line.value.is_object()) {
      out.rejects.push_back({line.line_no, "", "malformed_json"});
      continue;
    }
    const std::string id = detail::record_id(line.value, opts.field_map);
    try {
      if (id.empty()) throw RecordRejected("missing_field:id");
      PreferencePair p;
      switch (modality) {
        case Modality::completion: p = detail::normalize_completion(line.value, opts.field_map); break;
        case Modality::chat: p = detail::normalize_chat(line.value, opts.field_map, filter, id); break;
        case Modality::edit: p = detail::normalize_edit(line.value, opts.field_map); break;
      }
      if (!seen.insert(id).second) throw RecordRejected("duplicate_id");
      p.id = id;
      out.pairs.push_back(std::move(p));
    } catch (const RecordRejected& e) {
      out.rejects.push_back({line.line_no, id, e.code()});
    } catch (const json::exception&) {
      out.rejects.push_back({line.line_no, id, "malformed_record"});
    }
  }
  if (out.pairs.empty()) {
    throw EmptyResult("no " + std::string(to_string(modality)) + " records survived filtering (" +
                      std::to_string(out.rejects.size()) + " rejected)");
  }
  return out;
}

inline NormalizeResult normalize_dataset(std::string_view modality, std::span<const json> raw_records,
                                         const NormalizeOptions& opts) {
  const Modality m = parse_modality(modality);
  std::vector<JsonLine> lines;
  lines.reserve(raw_records.size());
  for (std::size_t i = 0; i < raw_records.size(); ++i) lines.push_back({i + 1, raw_records[i]});
  return normalize_records(m, lines, opts);
}

inline NormalizeResult normalize_dataset(std::string_view modality, std::span<const json> raw_records) {
  return normalize_dataset(modality, raw_records,
                           NormalizeOptions{FieldMap::defaults(parse_modality(modality))});
}

// Serializes a canonical pair back into its modality's source schema, so the
// output of normalization can be fed through it again.
inline json to_raw_record(const PreferencePair& p, const FieldMap& fm) {
  json r = json::object();
  const auto& c = p.context;
  switch (p.modality) {
    case Modality::completion:
      r[fm.column("id")] = p.id;
      r[fm.column("prefix")] = c.prefix.value_or("");
      r[fm.column("suffix")] = c.suffix.value_or("");
      r[fm.column("completions")] = json::array({p.response_a, p.response_b});
      r[fm.column("accepted_index")] = p.winner == Side::b ? 1 : 0;
      break;
    case Modality::chat: {
      auto conv = [&](const std::string& resp) {
        return json::array({json{{"role", "user"}, {"content", c.prompt.value_or("")}},
                            json{{"role", "assistant"}, {"content", resp}}});
      };
      r[fm.column("id")] = p.id;
      r[fm.column("is_code")] = true;
      r[fm.column("winner")] = p.winner == Side::a ? "model_a" : "model_b";
      r[fm.column("conversation_a")] = conv(p.response_a);
      r[fm.column("conversation_b")] = conv(p.response_b);
      break;
    }
    case Modality::edit:
      r[fm.column("id")] = p.id;
      r[fm.column("instruction")] = c.instruction.value_or("");
      r[fm.column("code_to_edit")] = c.code_to_edit.value_or("");
      r[fm.column("prefix")] = c.prefix.value_or("");
      r[fm.column("suffix")] = c.suffix.value_or("");
      r[fm.column("candidates")] = json::array({p.response_a, p.response_b}).dump();
      r[fm.column("consent")] = true;
      r[fm.column("preference")] = p.winner == Side::a ? "first" : "second";
      break;
  }
  return r;
}

inline json to_raw_record(const PreferencePair& p) { return to_raw_record(p, FieldMap::defaults(p.modality)); }

}  // namespace judgealign
