#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "judgealign/core/text.hpp"
#include "judgealign/core/types.hpp"
#include "judgealign/dataset/edit_distance.hpp"
#include "judgealign/dataset/normalize.hpp"

namespace judgealign {

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
// `percent` is an integer in (0, 100]; `values` need not be sorted.
template <typename T>
T nearest_rank(std::vector<T> values, unsigned percent) {
  if (values.empty()) throw EmptyDataset("percentile of an empty sample");
  if (percent == 0 || percent > 100) throw PreconditionError("percent must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

struct Percentiles {
  std::size_t n = 0;
  std::size_t p50 = 0;
  std::size_t p95 = 0;
};

inline Percentiles summarize(const std::vector<std::size_t>& values) {
  return {values.size(), nearest_rank(values, 50), nearest_rank(values, 95)};
}

class LanguageDetector {
 public:
  virtual ~LanguageDetector() = default;
  // Programming language of the pair's code; "unknown" when undetermined.
  virtual std::string programming_language(const PreferencePair& pair) const = 0;
  // Natural language (or script) of free text; "unknown" when undetermined.
  virtual std::string natural_language(std::string_view text) const = 0;
};

// Keyword heuristics for code and Unicode-script buckets for prose. Chat pairs
// take their language from shared fence tags before any heuristic is tried.
class HeuristicLanguageDetector : public LanguageDetector {
 public:
  HeuristicLanguageDetector() : aliases_(ChatFilterConfig::defaults().language_aliases) {}

  std::string programming_language(const PreferencePair& p) const override {
    if (p.modality == Modality::chat) {
      std::map<std::string, int> counts;
      for (const auto* resp : {&p.response_a, &p.response_b}) {
        std::set<std::string> langs;
        for (const auto& b : text::fenced_code_blocks(*resp)) {
          if (auto it = aliases_.find(b.language); it != aliases_.end()) langs.insert(it->second);
        }
        for (const auto& l : langs) ++counts[l];
      }
      std::string best;
      int best_count = 0;
      for (const auto& [lang, n] : counts) {
        if (n > best_count) {
          best = lang;
          best_count = n;
        }
      }
      if (!best.empty()) return best;
    }
    std::string code = p.context.prefix.value_or("") + "\n" + p.context.code_to_edit.value_or("") +
                       "\n" + p.context.suffix.value_or("") + "\n" + p.response_a;
    return guess_from_code(code);
  }

  std::string natural_language(std::string_view s) const override {
    std::map<std::string, std::size_t> scripts;
    std::size_t i = 0;
    while (i < s.size()) {
      const auto c = static_cast<unsigned char>(s[i]);
      std::uint32_t cp = c;
      std::size_t len = 1;
      if (c >= 0xF0 && i + 3 < s.size()) {
        cp = ((c & 0x07u) << 18) | ((s[i + 1] & 0x3Fu) << 12) | ((s[i + 2] & 0x3Fu) << 6) | (s[i + 3] & 0x3Fu);
        len = 4;
      } else if (c >= 0xE0 && i + 2 < s.size()) {
        cp = ((c & 0x0Fu) << 12) | ((s[i + 1] & 0x3Fu) << 6) | (s[i + 2] & 0x3Fu);
        len = 3;
      } else if (c >= 0xC0 && i + 1 < s.size()) {
        cp = ((c & 0x1Fu) << 6) | (s[i + 1] & 0x3Fu);
        len = 2;
      }
      i += len;
      if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= 0xC0 && cp < 0x250)) {
        ++scripts["latin"];
      } else if (cp >= 0x400 && cp < 0x530) {
        ++scripts["cyrillic"];
      } else if (cp >= 0x600 && cp < 0x700) {
        ++scripts["arabic"];
      } else if ((cp >= 0x3040 && cp < 0x3100)) {
        ++scripts["japanese"];
      } else if (cp >= 0xAC00 && cp < 0xD7B0) {
        ++scripts["korean"];
      } else if (cp >= 0x4E00 && cp < 0xA000) {
        ++scripts["cjk"];
      }
    }
    std::string best = "unknown";
    std::size_t best_count = 0;
    for (const auto& [name, n] : scripts) {
      if (n > best_count) {
        best = name;
        best_count = n;
      }
    }
    // Kana anywhere marks Japanese even when kanji dominate.
    if (best == "cjk" && scripts.contains("japanese")) best = "japanese";
    return best;
  }

 private:
  static std::string guess_from_code(const std::string& code) {
    struct Rule {
      const char* language;
      std::regex pattern;
    };
    static const std::vector<Rule> rules = [] {
      const auto f = std::regex::ECMAScript;
      return std::vector<Rule>{
          {"cpp", std::regex(R"(#include\s*<|std::|template\s*<)", f)},
          {"rust", std::regex(R"(\bfn\s+\w+\s*\(|\blet\s+mut\b|\bimpl\b)", f)},
          {"go", std::regex(R"(\bpackage\s+\w+|\bfunc\s+\w+\s*\()", f)},
          {"java", std::regex(R"(\bpublic\s+(static\s+)?(class|void)\b|System\.out)", f)},
          {"csharp", std::regex(R"(\busing\s+System\b|\bnamespace\s+\w+\s*\{)", f)},
          {"typescript", std::regex(R"(\binterface\s+\w+\s*\{|:\s*(string|number|boolean)\b)", f)},
          {"javascript", std::regex(R"(\bfunction\b|\bconst\s+\w+\s*=|=>|console\.log)", f)},
          {"python", std::regex(R"(\bdef\s+\w+\s*\(|\bimport\s+\w+|\bself\b|:\s*\n\s+)", f)},
          {"php", std::regex(R"(<\?php|\$\w+\s*=)", f)},
          {"ruby", std::regex(R"(\bend\s*$|\bputs\b|\brequire\s+['"])", f)},
          {"sql", std::regex(R"(\bSELECT\b.*\bFROM\b)", f | std::regex::icase)},
          {"html", std::regex(R"(<(div|html|body|span)\b)", f)},
      };
    }();
    for (const auto& r : rules) {
      if (std::regex_search(code, r.pattern)) return r.language;
    }
    return "unknown";
  }

  std::map<std::string, std::string> aliases_;
};

struct DatasetStats {
  std::size_t n_pairs = 0;
  Percentiles context_length;
  Percentiles output_length;
  Percentiles lines_of_code;
  Percentiles edit_distance;
  std::map<std::string, std::size_t> programming_languages;
  std::map<std::string, std::size_t> natural_languages;
  std::map<std::string, std::string> metadata;
};

// Characters of context shown to the judge. Completion counts prefix+suffix.
inline std::size_t context_length(const PreferencePair& p) {
  const auto& c = p.context;
  switch (p.modality) {
    case Modality::completion:
      return text::utf8_length(c.prefix.value_or("")) + text::utf8_length(c.suffix.value_or(""));
    case Modality::chat:
      return text::utf8_length(c.prompt.value_or(""));
    case Modality::edit:
      return text::utf8_length(c.prefix.value_or("")) + text::utf8_length(c.code_to_edit.value_or("")) +
             text::utf8_length(c.suffix.value_or("")) + text::utf8_length(c.instruction.value_or(""));
  }
  return 0;
}

// Lines of code in view: the file for completion and edit, the fenced code of
// both responses (averaged) for chat.
inline std::size_t lines_of_code(const PreferencePair& p) {
  const auto& c = p.context;
  switch (p.modality) {
    case Modality::completion:
      return text::split_lines(c.prefix.value_or("") + c.suffix.value_or("")).size();
    case Modality::edit:
      return text::split_lines(c.prefix.value_or("") + c.code_to_edit.value_or("") + c.suffix.value_or(""))
          .size();
    case Modality::chat:
      return (text::split_lines(text::code_or_text(p.response_a)).size() +
              text::split_lines(text::code_or_text(p.response_b)).size() + 1) /
             2;
  }
  return 0;
}

inline std::string natural_language_source(const PreferencePair& p) {
  switch (p.modality) {
    case Modality::completion: return p.context.prefix.value_or("");
    case Modality::chat: return p.context.prompt.value_or("");
    case Modality::edit: return p.context.instruction.value_or("");
  }
  return {};
}

inline DatasetStats compute_dataset_stats(std::span<const PreferencePair> pairs, const LanguageDetector& detector) {
  if (pairs.empty()) throw EmptyDataset("cannot compute statistics of an empty dataset");
  DatasetStats s;
  s.n_pairs = pairs.size();
  std::vector<std::size_t> ctx, out, loc, dist;
  for (const auto& p : pairs) {
    ctx.push_back(context_length(p));
    out.push_back(text::utf8_length(p.response_a));
    out.push_back(text::utf8_length(p.response_b));
    loc.push_back(lines_of_code(p));
    dist.push_back(pair_edit_distance(p));
    ++s.programming_languages[detector.programming_language(p)];
    ++s.natural_languages[detector.natural_language(natural_language_source(p))];
  }
  s.context_length = summarize(ctx);
  s.output_length = summarize(out);
  s.lines_of_code = summarize(loc);
  s.edit_distance = summarize(dist);
  s.metadata = {
      {"percentile", "nearest-rank"},
      {"length_unit", "unicode code points"},
      {"context_length.completion", "prefix+suffix"},
      {"context_length.edit", "prefix+code_to_edit+suffix+instruction"},
      {"context_length.chat", "prompt"},
      {"output_length", "each response counted separately"},
      {"lines_of_code", "file lines (completion, edit); mean fenced-code lines of the two responses (chat)"},
      {"edit_distance", "line-level Levenshtein between candidates; chat uses fenced code when present"},
  };
  return s;
}

inline void to_json(json& j, const Percentiles& p) { j = json{{"n", p.n}, {"p50", p.p50}, {"p95", p.p95}}; }

inline void to_json(json& j, const DatasetStats& s) {
  j = json{{"n_pairs", s.n_pairs},
           {"context_length", s.context_length},
           {"output_length", s.output_length},
           {"lines_of_code", s.lines_of_code},
           {"edit_distance", s.edit_distance},
           {"programming_languages", s.programming_languages},
           {"natural_languages", s.natural_languages},
           {"metadata", s.metadata}};
}

}  // namespace judgealign
