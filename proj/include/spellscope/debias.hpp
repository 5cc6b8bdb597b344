#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spellscope/corpus_scan.hpp"
#include "spellscope/lexicon.hpp"
#include "spellscope/random.hpp"
#include "spellscope/record_io.hpp"

namespace spellscope {

enum class CaseShape : std::uint8_t { Lower, Initial, Upper, Mixed };

CaseShape case_shape(std::string_view word);
/// Mixed falls back to lowercase.
std::string apply_case(std::string_view lower_word, CaseShape shape);

inline constexpr std::string_view kCasePolicy = "copy lower/Initial/UPPER; mixed case -> lower";

struct RewriteRecord {
  std::uint64_t source_id = 0;
  Side side = Side::US;
  std::string text;
  std::vector<std::size_t> variant_positions;  // token indices
  std::size_t changed = 0;
};

/// Puts every lexicon token on `side`, splicing at the original byte
/// offsets. Tokens already on `side` keep their bytes.
RewriteRecord rewrite(std::string_view text, Side side, const VariantLexicon& lex,
                      std::uint64_t source_id = 0);

/// Gives each lexicon token an independently drawn side. Used to build
/// convention-shuffled control corpora.
std::string scramble_sides(std::string_view text, const VariantLexicon& lex, ChaChaRng& rng);

struct SyntheticOptions {
  std::uint64_t validation_size = 0;  // output records, must be even
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t batch_records = 1 << 13;
};

struct SyntheticManifest {
  std::uint64_t records_read = 0;
  std::uint64_t qualifying_sources = 0;
  std::uint64_t train_records = 0;
  std::uint64_t validation_records = 0;
  std::uint64_t us_records = 0;
  std::uint64_t uk_records = 0;
  std::uint64_t seed = 0;
  std::uint64_t validation_size = 0;
  std::string lexicon_sha256;
  std::vector<std::uint64_t> validation_ids;  // source ids, ascending
};

nlohmann::ordered_json to_json(const SyntheticManifest& m);

using StreamFactory = std::function<std::unique_ptr<RecordStream>()>;

/// Reads the corpus twice: once to count qualifying records (at least one
/// lexicon token), once to write. Each qualifying record yields its US then
/// its UK version; validation_size / 2 sources, picked by ChaChaRng(seed),
/// go to `validation` and the rest to `train`, in source order.
///
/// Throws Error(Config) on an odd or oversized validation_size and
/// Error(DataFormat) when no record qualifies.
SyntheticManifest build_synthetic(const StreamFactory& corpus, const VariantLexicon& lex,
                                  RecordWriter& train, RecordWriter& validation,
                                  const SyntheticOptions& opts);

struct VerificationReport {
  ConsistencyCounts counts;
  std::uint64_t records = 0;
  std::uint64_t offending_total = 0;
  std::vector<std::uint64_t> offending_records;  // first few record ids, 0-based

  bool empty() const { return records == 0; }
  bool balanced() const { return counts.all().us_matched == counts.all().uk_matched; }
  bool ok() const { return counts.all().mismatched() == 0 && balanced(); }
};

VerificationReport verify_consistency(RecordStream& corpus, const VariantLexicon& lex,
                                      std::size_t max_listed = 100);

nlohmann::ordered_json to_json(const VerificationReport& r);

}  // namespace spellscope
