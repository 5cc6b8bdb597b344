#include "spellscope/text.hpp"

namespace spellscope {

namespace {

bool is_ascii_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

char lower(unsigned char c) {
  return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
}

template <typename Emit>
void for_each_token(std::string_view text, Emit&& emit) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && !is_ascii_letter(static_cast<unsigned char>(text[i]))) ++i;
    if (i == n) break;
    const std::size_t begin = i;
    while (i < n && is_ascii_letter(static_cast<unsigned char>(text[i]))) ++i;
    emit(begin, i);
  }
}

}  // namespace

std::size_t count_invalid_utf8(std::string_view text) {
  std::size_t bad = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c >= 0xc2 && c <= 0xdf) {
      len = 2;
      cp = c & 0x1f;
    } else if (c >= 0xe0 && c <= 0xef) {
      len = 3;
      cp = c & 0x0f;
    } else if (c >= 0xf0 && c <= 0xf4) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len != 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xc0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (ok) {
      // Overlong forms, surrogates and out-of-range code points.
      if ((len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10ffff)) ||
          (cp >= 0xd800 && cp <= 0xdfff)) {
        ok = false;
      }
    }
    if (ok) {
      i += len;
    } else {
      ++bad;
      ++i;
    }
  }
  return bad;
}

TokenizedRecord normalize_record(std::string_view text, std::uint64_t record_id) {
  TokenizedRecord rec;
  rec.record_id = record_id;
  for_each_token(text, [&](std::size_t b, std::size_t e) {
    std::string w(e - b, '\0');
    for (std::size_t k = b; k < e; ++k) w[k - b] = lower(static_cast<unsigned char>(text[k]));
    rec.tokens.push_back(Token{std::move(w), b, e});
  });
  rec.invalid_bytes = count_invalid_utf8(text);
  return rec;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  for_each_token(text, [&](std::size_t b, std::size_t e) {
    std::string w(e - b, '\0');
    for (std::size_t k = b; k < e; ++k) w[k - b] = lower(static_cast<unsigned char>(text[k]));
    out.push_back(std::move(w));
  });
  return out;
}

}  // namespace spellscope
