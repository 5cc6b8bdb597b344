#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spellscope/common.hpp"
#include "spellscope/lexicon.hpp"
#include "spellscope/record_io.hpp"
#include "spellscope/tables.hpp"
#include "spellscope/text.hpp"

namespace spellscope {

struct PairObservation {
  std::string first;
  std::string second;
  Side first_side;
  Side second_side;
  bool adjacent;  // consecutive tokens, nothing in between
};

enum class PairClass : std::uint8_t { UsMatched, UkMatched, MismatchedUsFirst, MismatchedUkFirst };

constexpr PairClass classify_pair(Side first, Side second) {
  if (first == second) return first == Side::US ? PairClass::UsMatched : PairClass::UkMatched;
  return first == Side::US ? PairClass::MismatchedUsFirst : PairClass::MismatchedUkFirst;
}

struct ClassCounts {
  std::uint64_t us_matched = 0;
  std::uint64_t uk_matched = 0;
  std::uint64_t mismatched_us_first = 0;
  std::uint64_t mismatched_uk_first = 0;

  std::uint64_t total() const;
  std::uint64_t mismatched() const;
  std::uint64_t& operator[](PairClass c);
  std::uint64_t operator[](PairClass c) const;
  /// Throws Error(DataFormat) on 64-bit overflow.
  ClassCounts& operator+=(const ClassCounts& other);
  ClassCounts& operator-=(const ClassCounts& other);
  bool operator==(const ClassCounts&) const = default;
};

/// Pair counts split by adjacency; the "all" condition is their sum.
struct ConsistencyCounts {
  ClassCounts adjacent;
  ClassCounts non_adjacent;

  ClassCounts all() const;
  const ClassCounts& at(Condition c) const {
    return c == Condition::Adjacent ? adjacent : non_adjacent;
  }
  ConsistencyCounts& operator+=(const ConsistencyCounts& other);
  bool operator==(const ConsistencyCounts&) const = default;
};

ConsistencyCounts merge(const ConsistencyCounts& a, const ConsistencyCounts& b);

struct ScanDiagnostics {
  std::uint64_t records = 0;
  std::uint64_t tokens = 0;
  std::uint64_t variant_tokens = 0;
  std::uint64_t invalid_bytes = 0;
  std::uint64_t records_over_pair_cap = 0;

  ScanDiagnostics& operator+=(const ScanDiagnostics& other);
  bool operator==(const ScanDiagnostics&) const = default;
};

struct ScanOptions {
  unsigned workers = 1;
  std::size_t pair_cap = 10'000;
  std::size_t batch_records = 1 << 14;
};

struct ScanResult {
  ConsistencyCounts counts;
  ScanDiagnostics diagnostics;
};

constexpr std::size_t kDefaultPairCap = 10'000;

/// Every ordered pair (i < j) of variant tokens in the record. At most
/// `pair_cap` observations are materialized, in (i, j) lexicographic order.
std::vector<PairObservation> extract_pairs(const TokenizedRecord& rec, const VariantLexicon& lex,
                                           std::size_t pair_cap = kDefaultPairCap);

/// Exact pair counts for one record without materializing the pairs.
/// Linear in the token count.
ConsistencyCounts count_pairs(const TokenizedRecord& rec, const VariantLexicon& lex);

/// Single pass; memory bounded by one batch of records.
ScanResult scan(RecordStream& records, const VariantLexicon& lex, const ScanOptions& opts = {});
ScanResult scan(std::span<const std::string> records, const VariantLexicon& lex,
                const ScanOptions& opts = {});

/// Rows undefined when no pair in the condition starts with that side.
ConditionalTable corpus_conditional_table(const ConsistencyCounts& c, Condition condition);

struct CorpusReport {
  std::string corpus;
  Granularity granularity = Granularity::Line;
  std::uint64_t total_pairs = 0;
  // Percentages in tenths of a percent, rounded half to even.
  std::int64_t pct_us_tenths = 0;
  std::int64_t pct_uk_tenths = 0;
  std::int64_t pct_mis_tenths = 0;
  ConditionalTable adjacent;
  ConditionalTable non_adjacent;

  bool no_pairs() const { return total_pairs == 0; }
};

/// round-half-even(1000 * part / total); total must be > 0.
std::int64_t tenths_of_percent(std::uint64_t part, std::uint64_t total);
std::string format_tenths(std::int64_t tenths);

CorpusReport report(const ConsistencyCounts& c, std::string corpus = "corpus",
                    Granularity granularity = Granularity::Line);

std::string render_tsv(const CorpusReport& r);
nlohmann::ordered_json report_json(const CorpusReport& r, const ConsistencyCounts& c,
                                   const ScanDiagnostics* diagnostics = nullptr);

nlohmann::ordered_json to_json(const ConsistencyCounts& c);
/// Throws Error(DataFormat) on a malformed document.
ConsistencyCounts counts_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const ConditionalTable& t);

}  // namespace spellscope
