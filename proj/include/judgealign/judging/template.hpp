#pragma once

#include <map>
#include <string>
#include <string_view>

#include <yaml-cpp/yaml.h>

#include "judgealign/core/builtin_templates.hpp"
#include "judgealign/core/error.hpp"
#include "judgealign/core/io.hpp"
#include "judgealign/core/types.hpp"

namespace judgealign {

struct PromptTemplate {
  std::string system;
  std::string query;
};

// Parses a template file of the form
//   system: |
//     ...
//   query: |
//     ...
inline PromptTemplate parse_prompt_template(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw FormatError(std::string("invalid prompt template: ") + e.what());
  }
  if (!root.IsMap() || !root["query"]) throw FormatError("prompt template needs a 'query' entry");
  PromptTemplate t;
  if (root["system"]) t.system = root["system"].as<std::string>();
  t.query = root["query"].as<std::string>();
  return t;
}

inline PromptTemplate load_prompt_template(const fs::path& path) { return parse_prompt_template(read_file(path)); }

inline PromptTemplate builtin_judge_template(Modality m) {
  switch (m) {
    case Modality::completion: return parse_prompt_template(builtin::judge_completion_yaml);
    case Modality::chat: return parse_prompt_template(builtin::judge_chat_yaml);
    case Modality::edit: return parse_prompt_template(builtin::judge_edit_yaml);
  }
  return {};
}

// Judge templates for all three modalities.
struct TemplateSet {
  PromptTemplate completion = builtin_judge_template(Modality::completion);
  PromptTemplate chat = builtin_judge_template(Modality::chat);
  PromptTemplate edit = builtin_judge_template(Modality::edit);

  const PromptTemplate& for_modality(Modality m) const {
    switch (m) {
      case Modality::completion: return completion;
      case Modality::chat: return chat;
      case Modality::edit: return edit;
    }
    return completion;
  }

  // Loads judge_<modality>.yaml from `dir`, keeping built-ins for absent files.
  static TemplateSet from_directory(const fs::path& dir) {
    TemplateSet s;
    for (auto m : {Modality::completion, Modality::chat, Modality::edit}) {
      const auto path = dir / ("judge_" + std::string(to_string(m)) + ".yaml");
      if (fs::exists(path)) {
        switch (m) {
          case Modality::completion: s.completion = load_prompt_template(path); break;
          case Modality::chat: s.chat = load_prompt_template(path); break;
          case Modality::edit: s.edit = load_prompt_template(path); break;
        }
      }
    }
    return s;
  }
};

using PlaceholderValues = std::map<std::string, std::string, std::less<>>;

// Replaces `{name}` for every name present in `values`, in one left-to-right
// pass: substituted text is never rescanned, and braces whose contents are
// not a known name are copied through unchanged.
inline std::string fill_placeholders(std::string_view tpl, const PlaceholderValues& values) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      const std::size_t close = tpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tpl.substr(i + 1, close - i - 1);
        if (auto it = values.find(name); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[i]);
    ++i;
  }
  return out;
}

// Placeholder names the judge template of each modality must resolve, with
// the context field that supplies each.
inline std::vector<std::pair<std::string, std::optional<std::string> ContextBundle::*>> judge_placeholders(
    Modality m) {
  using F = std::optional<std::string> ContextBundle::*;
  switch (m) {
    case Modality::completion:
      return {{"prefix", F{&ContextBundle::prefix}}, {"suffix", F{&ContextBundle::suffix}}};
    case Modality::chat:
      return {{"user_instruction", F{&ContextBundle::prompt}}};
    case Modality::edit:
      return {{"prefix", F{&ContextBundle::prefix}},
              {"suffix", F{&ContextBundle::suffix}},
              {"code_to_edit", F{&ContextBundle::code_to_edit}},
              {"user_input", F{&ContextBundle::instruction}}};
  }
  return {};
}

// Plain-text rendering of a pair's context for prompts that are not
// modality-specific (rubric proposer and scorer, reward models).
inline std::string context_text(const PreferencePair& p) {
  const auto& c = p.context;
  std::string out;
  auto section = [&](const char* tag, const std::optional<std::string>& v) {
    if (!v) return;
    if (!out.empty()) out += "\n\n";
    out += std::string("<") + tag + ">\n" + *v + "\n</" + tag + ">";
  };
  switch (p.modality) {
    case Modality::completion:
      section("prefix", c.prefix);
      section("suffix", c.suffix);
      break;
    case Modality::chat:
      section("prompt", c.prompt);
      break;
    case Modality::edit:
      section("prefix", c.prefix);
      section("suffix", c.suffix);
      section("code_to_edit", c.code_to_edit);
      section("instruction", c.instruction);
      break;
  }
  return out;
}

}  // namespace judgealign
