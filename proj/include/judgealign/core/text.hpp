#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace judgealign::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline bool is_continuation_byte(unsigned char c) { return (c & 0xC0) == 0x80; }

// Number of UTF-8 code points. Invalid bytes count as one character each.
inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if (!is_continuation_byte(c)) ++n;
  }
  return n;
}

// Byte offset just past the first `chars` code points.
inline std::size_t utf8_offset(std::string_view s, std::size_t chars) {
  std::size_t i = 0;
  while (i < s.size() && chars > 0) {
    ++i;
    while (i < s.size() && is_continuation_byte(static_cast<unsigned char>(s[i]))) ++i;
    --chars;
  }
  return i;
}

inline std::string drop_front_chars(std::string_view s, std::size_t chars) {
  return std::string(s.substr(utf8_offset(s, chars)));
}

inline std::string drop_back_chars(std::string_view s, std::size_t chars) {
  const std::size_t len = utf8_length(s);
  if (chars >= len) return {};
  return std::string(s.substr(0, utf8_offset(s, len - chars)));
}

// CRLF and lone CR become LF.
inline std::string normalize_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Lines of `s` after newline normalization. The empty text has no lines and a
// single trailing newline does not open an extra empty line.
inline std::vector<std::string> split_lines(std::string_view s) {
  const std::string norm = normalize_newlines(s);
  std::vector<std::string> lines;
  if (norm.empty()) return lines;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = norm.find('\n', start);
    if (nl == std::string::npos) {
      if (start < norm.size()) lines.emplace_back(norm.substr(start));
      break;
    }
    lines.emplace_back(norm.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

struct CodeBlock {
  std::string language;  // lower-cased info string, may be empty
  std::string body;
};

// Triple-backtick fenced blocks. An unterminated fence runs to end of text.
inline std::vector<CodeBlock> fenced_code_blocks(std::string_view s) {
  std::vector<CodeBlock> blocks;
  const std::string norm = normalize_newlines(s);
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = norm.find("```", pos);
    if (open == std::string::npos) break;
    std::size_t eol = norm.find('\n', open + 3);
    if (eol == std::string::npos) break;
    std::string info(trim(std::string_view(norm).substr(open + 3, eol - open - 3)));
    if (const auto sp = info.find_first_of(" \t{"); sp != std::string::npos) info.resize(sp);
    CodeBlock block{to_lower(info), {}};
    std::size_t close = norm.find("```", eol + 1);
    // A closing fence must start a line.
    while (close != std::string::npos && close > 0 && norm[close - 1] != '\n') {
      close = norm.find("```", close + 3);
    }
    if (close == std::string::npos) {
      block.body = norm.substr(eol + 1);
      blocks.push_back(std::move(block));
      break;
    }
    std::size_t body_end = close;
    if (body_end > eol + 1 && norm[body_end - 1] == '\n') --body_end;
    block.body = norm.substr(eol + 1, body_end > eol + 1 ? body_end - eol - 1 : 0);
    blocks.push_back(std::move(block));
    pos = close + 3;
  }
  return blocks;
}

// Concatenated fenced code contents, or the full text when there are none.
inline std::string code_or_text(std::string_view s) {
  const auto blocks = fenced_code_blocks(s);
  if (blocks.empty()) return std::string(s);
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += blocks[i].body;
  }
  return out;
}

}  // namespace judgealign::text
