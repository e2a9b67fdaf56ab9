// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clqa {

// Byte range [begin, end) of one token inside the original text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Decodes the code point starting at byte offset `i` and advances `i`.
// Malformed sequences consume one byte and decode to U+FFFD.
char32_t decode_utf8(std::string_view text, std::size_t& i);

bool is_unicode_space(char32_t cp);

// Scripts counted one token per character: Han, Kana, Hangul, Thai, Khmer.
bool is_char_token_script(char32_t cp);

// Tokenization policy shared by token counting, budget slicing and QA
// metrics: whitespace-delimited words, except that characters of the
// scripts above each form their own token.
std::vector<TokenSpan> tokenize_spans(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);
std::size_t count_tokens(std::string_view text);

// Prefix of the original text covering the first `n` tokens (the whole
// text when it has at most `n` tokens).
std::string_view token_prefix(std::string_view text, std::size_t n);

}  // namespace clqa
