#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace spellscope {

struct Token {
  std::string word;    // lowercase a-z
  std::size_t begin;   // byte offset in the source text
  std::size_t end;
};

struct TokenizedRecord {
  std::uint64_t record_id = 0;
  std::vector<Token> tokens;
  std::size_t invalid_bytes = 0;  // bytes that were not valid UTF-8
};

/// Lowercases ASCII letters and treats every other code point as a separator.
TokenizedRecord normalize_record(std::string_view text, std::uint64_t record_id = 0);

/// Lowercase token words only, same separator rule.
std::vector<std::string> tokenize_words(std::string_view text);

/// Number of bytes in `text` that do not belong to a well-formed UTF-8 sequence.
std::size_t count_invalid_utf8(std::string_view text);

}  // namespace spellscope
