#pragma once

// Reference implementations used only by tests. They follow the textbook
// definitions directly and share no code path with the library internals
// they check.

#include <cctype>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spellscope/corpus_scan.hpp"
#include "spellscope/lexicon.hpp"

namespace spellscope::oracle {

/// Double loop over every index pair i < j of a lowercase token sequence.
inline ConsistencyCounts brute_force_counts(const std::vector<std::string>& words,
                                            const VariantLexicon& lex) {
  ConsistencyCounts c;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto a = lex.lookup(words[i]);
    if (!a) continue;
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      const auto b = lex.lookup(words[j]);
      if (!b) continue;
      ClassCounts& bin = (j == i + 1) ? c.adjacent : c.non_adjacent;
      if (a->side == Side::US && b->side == Side::US) {
        ++bin.us_matched;
      } else if (a->side == Side::UK && b->side == Side::UK) {
        ++bin.uk_matched;
      } else if (a->side == Side::US) {
        ++bin.mismatched_us_first;
      } else {
        ++bin.mismatched_uk_first;
      }
    }
  }
  return c;
}

/// Splits on anything outside A-Za-z and lowercases; written independently of
/// normalize_record.
inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalpha(ch) && ch < 128) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double mutual_information(double p_us_us, double p_us_uk, double p_uk_us, double p_uk_uk) {
  const double p[2][2] = {{p_us_us, p_us_uk}, {p_uk_us, p_uk_uk}};
  double mi = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      const double px = p[x][0] + p[x][1];
      const double py = p[0][y] + p[1][y];
      if (p[x][y] > 0) mi += p[x][y] * std::log(p[x][y] / (px * py));
    }
  }
  return mi;
}

/// Random corpus records with neutral filler and variant words at random
/// positions, punctuation and case noise included.
class RecordGenerator {
 public:
  RecordGenerator(const VariantLexicon& lex, std::uint64_t seed) : lex_(lex), rng_(seed) {}

  std::string record(std::size_t max_tokens, std::size_t max_variants) {
    static const std::vector<std::string> kNeutral{"the", "tree", "sky", "a", "of", "desk",
                                                   "and", "jump", "small", "lovely"};
    static const std::vector<std::string> kSeparators{" ", " ", " ", ", ", "-", ". ", "  ", "\t"};
    const std::size_t n = pick(max_tokens + 1);
    const std::size_t variants = std::min(n, pick(max_variants + 1));
    std::vector<bool> is_variant(n, false);
    for (std::size_t k = 0; k < variants; ++k) is_variant[pick(n)] = true;
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      std::string w;
      if (is_variant[i]) {
        const auto& p = lex_[pick(lex_.size())];
        w = pick(2) == 0 ? p.us : p.uk;
      } else {
        w = kNeutral[pick(kNeutral.size())];
      }
      if (pick(10) == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (i > 0) out += kSeparators[pick(kSeparators.size())];
      out += w;
    }
    return out;
  }

 private:
  std::size_t pick(std::size_t n) {
    if (n == 0) return 0;
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  const VariantLexicon& lex_;
  std::mt19937_64 rng_;
};

}  // namespace spellscope::oracle
