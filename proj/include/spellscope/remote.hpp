#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spellscope/scorer.hpp"

namespace spellscope {

// Wire protocol shared with the inference service.
//
//   POST /score/span | /score/joint_span | /score/ar
//   {"mode": ..., "context": ... | "prefix": ..., ["suffix": ...],
//    "candidates": [...], "request_id": ...}
//   -> {"request_id": ..., "log_scores": [...]}   natural log, null = -inf
//   -> {"request_id": ..., "error": "..."}        per-request failure
//
//   GET /healthz -> {"model": ...}

std::string_view endpoint_for(ScoreMode mode);

nlohmann::ordered_json request_to_json(const ScoreRequest& r);
/// Server side. Throws Error(DataFormat) on a malformed or invalid body.
ScoreRequest request_from_json(const nlohmann::json& j);

nlohmann::ordered_json response_to_json(std::string_view request_id,
                                        const std::vector<double>& log_scores);
nlohmann::ordered_json error_response(std::string_view request_id, std::string_view message);
/// Client side. Throws Error(Backend) on an error reply, a mismatched
/// request id, a wrong score count or malformed JSON.
std::vector<double> parse_response(std::string_view body, const ScoreRequest& r);

struct RemoteOptions {
  std::string url;  // http://host:port
  std::chrono::milliseconds timeout{30'000};
  unsigned max_retries = 3;
  std::chrono::milliseconds backoff{200};  // doubled after each retry
  /// After this many requests in a row fail at the transport level, later
  /// requests fail at once instead of retrying.
  unsigned breaker_threshold = 4;
};

class RemoteScorer final : public Scorer {
 public:
  /// Throws Error(Config) for an unusable URL.
  explicit RemoteScorer(RemoteOptions opts);

  std::string backend() const override;
  std::vector<double> score(const ScoreRequest& r) const override;

  /// Model identifier from /healthz. Throws Error(Backend).
  std::string health() const;

 private:
  RemoteOptions opts_;
  mutable std::atomic<unsigned> transport_failures_{0};
};

}  // namespace spellscope
