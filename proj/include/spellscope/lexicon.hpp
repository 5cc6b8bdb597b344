#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spellscope/common.hpp"

namespace spellscope {

enum class SpellingRule : std::uint8_t {
  IZE_ISE,
  IZATION_ISATION,
  OR_OUR,
  ER_RE,
  L_DOUBLING,
  YZE_YSE,
  OTHER,
};

std::string_view to_string(SpellingRule r);
std::optional<SpellingRule> parse_rule(std::string_view s);

struct VariantPair {
  std::string us;
  std::string uk;
  SpellingRule rule = SpellingRule::OTHER;

  const std::string& form(Side s) const { return s == Side::US ? us : uk; }
  bool operator==(const VariantPair&) const = default;
};

struct LexiconHit {
  const VariantPair* pair;
  std::size_t index;
  Side side;
};

/// Immutable American/British variant dictionary.
///
/// Every word maps to exactly one pair and one side; a word listed on both
/// sides is rejected at construction.
class VariantLexicon {
 public:
  VariantLexicon() = default;
  /// Throws Error(DataFormat) on invalid words, duplicates or cross-listing.
  explicit VariantLexicon(std::vector<VariantPair> pairs);

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<VariantPair>& pairs() const { return pairs_; }
  const VariantPair& operator[](std::size_t i) const { return pairs_[i]; }

  /// Token must already be lowercase.
  std::optional<LexiconHit> lookup(std::string_view token) const;
  std::optional<Side> side_of(std::string_view token) const;

  /// Flat american->british JSON object in pair order.
  std::string to_json() const;
  /// SHA-256 of to_json(), hex.
  std::string checksum() const;

 private:
  struct Entry {
    std::size_t index;
    Side side;
  };
  std::vector<VariantPair> pairs_;
  std::unordered_map<std::string, Entry> index_;
};

/// First matching rule in the order
/// IZATION_ISATION > IZE_ISE > YZE_YSE > OR_OUR > ER_RE > L_DOUBLING > OTHER.
SpellingRule classify_rule(std::string_view us, std::string_view uk);

VariantLexicon parse_lexicon(std::string_view json_text);
VariantLexicon load_lexicon(const std::filesystem::path& path);

/// Pairs whose rule is not OTHER.
VariantLexicon rule_filtered(const VariantLexicon& lex);

struct NoncePair {
  std::string_view us;
  std::string_view uk;
};

/// Ten invented words carrying -or/-our, -er/-re and -ize/-ise endings.
/// None of them is in the real lexicon.
const std::array<NoncePair, 10>& nonce_table();
std::string nonce_table_json();

bool is_lower_word(std::string_view w);

}  // namespace spellscope
