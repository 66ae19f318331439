#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reformguard::text {

/// Byte range of one token inside its source string.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Tokens are maximal runs of non-whitespace, where whitespace is the Unicode
/// White_Space set decoded from UTF-8. Punctuation stays attached.
std::vector<TokenSpan> token_spans(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);
std::size_t token_count(std::string_view text);

std::string join(std::span<const std::string> parts, std::string_view sep);

/// Strip leading/trailing Unicode whitespace.
std::string_view trim(std::string_view text);

/// Byte offsets where sentences start. A sentence ends at a token whose last
/// character is '.', '!' or '?'; the next token starts a new sentence.
std::vector<std::size_t> sentence_starts(std::string_view text);

/// Token-level Levenshtein distance.
std::size_t token_edit_distance(std::span<const std::string> a,
                                std::span<const std::string> b);

}  // namespace reformguard::text
