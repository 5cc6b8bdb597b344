#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spellscope/common.hpp"
#include "spellscope/prompt_forge.hpp"

namespace spellscope {

enum class ScoreMode : std::uint8_t { SpanFillOne, SpanFillTwo, ArTargetOnly, ArToEos };

std::string_view to_string(ScoreMode m);  // "SPAN_FILL_ONE", ...
std::optional<ScoreMode> parse_score_mode(std::string_view s);

/// Marker for a masked span in span-fill contexts.
inline constexpr std::string_view kBlank = "<blank>";

/// One backend query. Span modes put blanks in `context`; AR modes use
/// `prefix` and, for AR_TO_EOS only, `suffix`.
///
/// SPAN_FILL_ONE, AR_*: every candidate is an alternative for the single
///   target and gets its own score.
/// SPAN_FILL_TWO: candidates are the two span fillers, one score.
struct ScoreRequest {
  ScoreMode mode = ScoreMode::SpanFillOne;
  std::string context;
  std::string prefix;
  std::optional<std::string> suffix;
  std::vector<std::string> candidates;
  std::string request_id;

  std::size_t expected_scores() const {
    return mode == ScoreMode::SpanFillTwo ? 1 : candidates.size();
  }
};

/// Throws Error(DataFormat) when blanks, candidates or suffix do not fit
/// the mode.
void validate(const ScoreRequest& r);

std::size_t count_blanks(std::string_view context);

class Scorer {
 public:
  virtual ~Scorer() = default;

  /// Identifier recorded in manifests and reports.
  virtual std::string backend() const = 0;

  /// Natural-log scores, expected_scores() of them. -inf is allowed.
  /// Throws Error(DataFormat) on a bad request, Error(Backend) on failure.
  virtual std::vector<double> score(const ScoreRequest& r) const = 0;

  double span_fill_score(std::string_view context, std::string_view candidate) const;
  double joint_span_score(std::string_view context, std::string_view cand1,
                          std::string_view cand2) const;
  double ar_score(std::string_view prefix, std::string_view target, ScoreMode mode,
                  std::optional<std::string_view> suffix = std::nullopt) const;
};

/// Log scores of one probe group, indexed like kSpellings:
/// (US,US), (US,UK), (UK,US), (UK,UK) as (cue, filler).
struct FourWayScores {
  std::size_t group = 0;
  std::size_t template_id = 0;
  std::size_t pair_id = 0;
  Condition condition = Condition::Adjacent;
  VariantPair cue;
  VariantPair filler;
  bool same_lexeme = false;
  std::array<double, 4> log_score{};

  double at(Side cue_side, Side filler_side) const {
    return log_score[(cue_side == Side::UK ? 2 : 0) + (filler_side == Side::UK ? 1 : 0)];
  }
  bool finite() const;
};

/// Requests that score one group under `mode`, ids "<prefix>g<group>.<k>".
std::vector<ScoreRequest> group_requests(const ProbeSet& set, std::size_t group, ScoreMode mode,
                                         std::string_view id_prefix = "");
FourWayScores score_group(const Scorer& scorer, const ProbeSet& set, std::size_t group,
                          ScoreMode mode);

/// -inf is written as null.
nlohmann::ordered_json to_json(const FourWayScores& s);
/// Throws Error(DataFormat).
FourWayScores scores_from_json(const nlohmann::json& j);
/// JSON Lines; errors carry the 1-based line number. An empty file is an
/// error.
std::vector<FourWayScores> read_scores(const std::filesystem::path& path);
std::vector<FourWayScores> parse_scores(std::string_view jsonl);

struct GroupFailure {
  std::size_t group = 0;
  std::string message;
};

struct ScoreRunOptions {
  unsigned workers = 8;
  std::size_t batch_groups = 4096;
  /// Stop after this many newly scored groups (for interruption tests).
  std::optional<std::size_t> limit;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct ScoreRunReport {
  std::size_t scored = 0;
  std::size_t skipped = 0;
  std::vector<GroupFailure> failures;
  bool interrupted = false;
  bool ok() const { return failures.empty() && !interrupted; }
};

/// Scores every group `wanted` accepts (all by default) and hands results to
/// `sink` in ascending group order, whatever the completion order.
ScoreRunReport score_probe_set(const Scorer& scorer, const ProbeSet& set, ScoreMode mode,
                               const ScoreRunOptions& opts,
                               const std::function<void(const FourWayScores&)>& sink,
                               const std::function<bool(std::size_t)>& wanted = {});

/// Collects all scores in memory.
std::vector<FourWayScores> score_all(const Scorer& scorer, const ProbeSet& set, ScoreMode mode,
                                     const ScoreRunOptions& opts = {});

/// File driver with checkpointing. Lines go to `<out>.partial` as groups
/// finish; a later call resumes from it and scores only the missing groups.
/// When every group is scored the canonical file is written to `out` and
/// the checkpoint removed. On failure the checkpoint is kept, `out` is not
/// written, and the report lists the failed groups.
ScoreRunReport score_to_file(const Scorer& scorer, const ProbeSet& set, ScoreMode mode,
                             const std::filesystem::path& out, const ScoreRunOptions& opts = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& out);

}  // namespace spellscope
