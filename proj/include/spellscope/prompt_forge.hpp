#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spellscope/common.hpp"
#include "spellscope/lexicon.hpp"
#include "spellscope/record_io.hpp"

namespace spellscope {

inline constexpr std::string_view kCueMarker = "<CUE>";
inline constexpr std::string_view kFillerMarker = "<FILLER>";

/// The ten neutral words placed between cue and filler in the non-adjacent
/// condition, with their punctuation.
inline constexpr std::string_view kNonAdjacentInsertion =
    ", flower, interesting, jump, ponderous, sky, skipping, desk, small, ladder, lovely,";

struct PromptTemplate {
  std::size_t id = 0;  // 1-based, file order
  std::string text;

  std::string_view before_cue() const;
  std::string_view between() const;
  std::string_view after_filler() const;
};

/// Validates one template line. Throws Error(DataFormat).
PromptTemplate make_template(std::size_t id, std::string text);

/// One template per line; blank lines are skipped. When `lex` is given, any
/// template token found in it is an error.
std::vector<PromptTemplate> parse_templates(std::string_view text,
                                            const VariantLexicon* lex = nullptr);
std::vector<PromptTemplate> load_templates(const std::filesystem::path& path,
                                           const VariantLexicon* lex = nullptr);

/// The 29 built-in probing templates.
const std::vector<PromptTemplate>& default_templates();

/// Throws Error(DataFormat) when a template or the non-adjacent insertion
/// contains a lexicon word.
void check_neutral(std::span<const PromptTemplate> templates, const VariantLexicon& lex);

struct PairCombo {
  VariantPair cue;
  VariantPair filler;
  std::size_t cue_index = 0;     // in the source lexicon (or nonce table)
  std::size_t filler_index = 0;
  bool same_lexeme = false;
};

/// n distinct ordered (cue, filler) combinations out of |lex|^2, drawn
/// without replacement by ChaChaRng(seed). Ascending by cue * |lex| + filler.
std::vector<PairCombo> sample_pairs(const VariantLexicon& lex, std::uint64_t n,
                                    std::uint64_t seed);

struct ProbeInstance {
  std::size_t template_id = 0;
  std::size_t pair_id = 0;
  Condition condition = Condition::Adjacent;
  Side cue_side = Side::US;
  Side filler_side = Side::US;
  std::string rendered_text;
  std::string cue_word;
  std::string filler_word;
  std::size_t cue_offset = 0;     // byte offsets into rendered_text
  std::size_t filler_offset = 0;
  bool same_lexeme = false;

  std::string_view prefix() const;  // text before the filler, trailing spaces trimmed
  std::string_view suffix() const;  // text after the filler
};

ProbeInstance render_probe(const PromptTemplate& t, const VariantPair& cue,
                           const VariantPair& filler, Side cue_side, Side filler_side,
                           Condition condition);

/// Spelling combinations in canonical order US/US, US/UK, UK/US, UK/UK.
inline constexpr std::array<std::pair<Side, Side>, 4> kSpellings{{
    {Side::US, Side::US},
    {Side::US, Side::UK},
    {Side::UK, Side::US},
    {Side::UK, Side::UK},
}};

struct ProbeGroupKey {
  std::size_t index = 0;
  std::size_t template_index = 0;
  std::size_t pair_index = 0;
  Condition condition = Condition::Adjacent;
};

/// Cross product of conditions x templates x pairs x four spellings,
/// materialized on demand. Group order is condition-major, then template,
/// then pair.
class ProbeSet {
 public:
  ProbeSet() = default;
  ProbeSet(std::vector<PromptTemplate> templates, std::vector<PairCombo> pairs,
           std::vector<Condition> conditions, std::uint64_t seed, std::string kind);

  std::size_t group_count() const { return conditions_.size() * templates_.size() * pairs_.size(); }
  std::size_t instance_count() const { return 4 * group_count(); }
  std::size_t pair_count() const { return pairs_.size(); }
  std::size_t template_count() const { return templates_.size(); }
  std::uint64_t sampling_seed() const { return seed_; }
  const std::string& kind() const { return kind_; }
  const std::vector<PromptTemplate>& templates() const { return templates_; }
  const std::vector<PairCombo>& pairs() const { return pairs_; }
  const std::vector<Condition>& conditions() const { return conditions_; }

  ProbeGroupKey group(std::size_t g) const;
  /// The four spelling variants of group g in kSpellings order.
  std::array<ProbeInstance, 4> group_instances(std::size_t g) const;
  ProbeInstance instance(std::size_t i) const;

 private:
  std::vector<PromptTemplate> templates_;
  std::vector<PairCombo> pairs_;
  std::vector<Condition> conditions_;
  std::uint64_t seed_ = 0;
  std::string kind_;
};

/// Throws Error(Config) on empty templates, pairs or conditions, and
/// Error(DataFormat) when a template is not neutral under `lex`.
ProbeSet build_probe_set(std::vector<PromptTemplate> templates, std::vector<PairCombo> pairs,
                         std::vector<Condition> conditions, const VariantLexicon& lex,
                         std::uint64_t seed = 0);

/// Real cue words from `cues` against every nonce filler, adjacent
/// condition only.
ProbeSet build_nonce_set(std::vector<PromptTemplate> templates, std::span<const VariantPair> cues,
                         std::span<const NoncePair> nonce, const VariantLexicon& lex,
                         std::uint64_t seed = 0);

nlohmann::ordered_json to_json(const ProbeInstance& p);
/// JSON Lines, one instance per line, in instance order.
void write_probes(const ProbeSet& set, RecordWriter& out);

}  // namespace spellscope
