#include "reformguard/text.hpp"

#include <algorithm>
#include <cstdint>

namespace reformguard::text {
namespace {

bool is_space_codepoint(std::uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Length in bytes of the whitespace character at `pos`, or 0 if the character
// there is not whitespace. Invalid UTF-8 is treated as non-whitespace.
std::size_t space_width(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return is_space_codepoint(b0) ? 1 : 0;
  std::size_t len = 0;
  std::uint32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else {
    return 0;
  }
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  return is_space_codepoint(cp) ? len : 0;
}

}  // namespace

std::vector<TokenSpan> token_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t pos = 0;
  bool in_token = false;
  std::size_t start = 0;
  while (pos < text.size()) {
    const std::size_t w = space_width(text, pos);
    if (w > 0) {
      if (in_token) spans.push_back({start, pos});
      in_token = false;
      pos += w;
    } else {
      if (!in_token) start = pos;
      in_token = true;
      ++pos;
    }
  }
  if (in_token) spans.push_back({start, text.size()});
  return spans;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const auto& span : token_spans(text)) {
    tokens.emplace_back(text.substr(span.begin, span.end - span.begin));
  }
  return tokens;
}

std::size_t token_count(std::string_view text) { return token_spans(text).size(); }

std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string_view trim(std::string_view text) {
  const auto spans = token_spans(text);
  if (spans.empty()) return {};
  return text.substr(spans.front().begin, spans.back().end - spans.front().begin);
}

std::vector<std::size_t> sentence_starts(std::string_view text) {
  std::vector<std::size_t> starts;
  bool at_boundary = true;
  for (const auto& span : token_spans(text)) {
    if (at_boundary) starts.push_back(span.begin);
    const char last = text[span.end - 1];
    at_boundary = last == '.' || last == '!' || last == '?';
  }
  return starts;
}

std::size_t token_edit_distance(std::span<const std::string> a,
                                std::span<const std::string> b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace reformguard::text
