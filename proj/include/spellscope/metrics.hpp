#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spellscope/scorer.hpp"
#include "spellscope/tables.hpp"

namespace spellscope {

/// P(second = US | cue) and P(second = UK | cue).
struct RowPair {
  double second_us = 0.0;
  double second_uk = 0.0;
};

/// Stable two-way softmax of log scores. Empty when both are -inf.
std::optional<RowPair> normalize_pair(double log_us, double log_uk);

/// Both cue rows of one group, indexed by cue side (US, UK).
std::array<std::optional<RowPair>, 2> normalize_rows(const FourWayScores& s);

struct JointDistribution {
  double p_us_us = 0.25;
  double p_us_uk = 0.25;
  double p_uk_us = 0.25;
  double p_uk_uk = 0.25;

  double p_cue(Side s) const { return s == Side::US ? p_us_us + p_us_uk : p_uk_us + p_uk_uk; }
  double p_filler(Side s) const { return s == Side::US ? p_us_us + p_uk_us : p_us_uk + p_uk_uk; }
};

/// Four-way softmax over the group's log scores. Empty when all are -inf or
/// any is NaN.
std::optional<JointDistribution> joint_distribution(const FourWayScores& s);

/// In nats; 0 log 0 terms are 0.
double mutual_information(const JointDistribution& j);

/// Groups of one condition with a non-finite score are excluded and counted.
/// With `by_template`, rows are averaged per template first and the table
/// holds the mean and population standard deviation across templates;
/// otherwise the std is across groups.
ConditionalTable conditional_table(std::span<const FourWayScores> groups, Condition condition,
                                   bool by_template = false);

struct AccuracyResult {
  Condition condition = Condition::Adjacent;
  /// Wins of the consistent completion per cue side, ties as 0.5.
  std::array<double, 2> wins{};
  std::size_t groups = 0;

  /// Percentage for a cue side; 0 when there are no groups.
  double percent(Side cue) const;
};

/// Compares scores only, so any strictly increasing transform of them gives
/// the same result. -inf counts as the lowest score.
AccuracyResult accuracy(std::span<const FourWayScores> groups, Condition condition);

struct MIResult {
  Condition condition = Condition::Adjacent;
  double mean = 0.0;  // nats
  std::size_t groups = 0;
  std::size_t excluded = 0;
  double min = 0.0;
  double max = 0.0;
};

MIResult average_mi(std::span<const FourWayScores> groups, Condition condition);

struct MetricsMetadata {
  std::string backend;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string scores_sha256;
};

struct MetricsReport {
  MetricsMetadata meta;
  bool by_template = false;
  std::vector<ConditionalTable> tables;
  std::vector<AccuracyResult> accuracy;
  std::vector<MIResult> mi;
};

/// One entry per condition present in `groups`, adjacent first.
MetricsReport compute_metrics(std::span<const FourWayScores> groups, bool by_template,
                              MetricsMetadata meta = {});

std::string render_tsv(const MetricsReport& r);
nlohmann::ordered_json to_json(const MetricsReport& r);

}  // namespace spellscope
