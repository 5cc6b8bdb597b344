#include "spellscope/remote.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include "httplib.h"

namespace spellscope {

namespace {

httplib::Client make_client(const RemoteOptions& o) {
  httplib::Client c(o.url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(o.timeout).count();
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(o.timeout).count() % 1'000'000;
  c.set_connection_timeout(secs, usecs);
  c.set_read_timeout(secs, usecs);
  c.set_write_timeout(secs, usecs);
  return c;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string_view endpoint_for(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::SpanFillOne:
      return "/score/span";
    case ScoreMode::SpanFillTwo:
      return "/score/joint_span";
    case ScoreMode::ArTargetOnly:
    case ScoreMode::ArToEos:
      break;
  }
  return "/score/ar";
}

nlohmann::ordered_json request_to_json(const ScoreRequest& r) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(r.mode);
  if (r.mode == ScoreMode::SpanFillOne || r.mode == ScoreMode::SpanFillTwo) {
    j["context"] = r.context;
  } else {
    j["prefix"] = r.prefix;
    if (r.suffix) j["suffix"] = *r.suffix;
  }
  j["candidates"] = r.candidates;
  j["request_id"] = r.request_id;
  return j;
}

ScoreRequest request_from_json(const nlohmann::json& j) {
  ScoreRequest r;
  try {
    const auto mode = parse_score_mode(j.at("mode").get<std::string>());
    if (!mode) throw Error(ErrorKind::DataFormat, "unknown mode");
    r.mode = *mode;
    if (j.contains("context")) r.context = j["context"].get<std::string>();
    if (j.contains("prefix")) r.prefix = j["prefix"].get<std::string>();
    if (j.contains("suffix") && !j["suffix"].is_null()) r.suffix = j["suffix"].get<std::string>();
    r.candidates = j.at("candidates").get<std::vector<std::string>>();
    r.request_id = j.at("request_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataFormat, std::string("bad score request: ") + e.what());
  }
  validate(r);
  return r;
}

nlohmann::ordered_json response_to_json(std::string_view request_id,
                                        const std::vector<double>& log_scores) {
  nlohmann::ordered_json scores = nlohmann::ordered_json::array();
  for (const double s : log_scores) {
    if (std::isfinite(s)) {
      scores.push_back(s);
    } else {
      scores.push_back(nullptr);
    }
  }
  return {{"request_id", request_id}, {"log_scores", std::move(scores)}};
}

nlohmann::ordered_json error_response(std::string_view request_id, std::string_view message) {
  return {{"request_id", request_id}, {"error", message}};
}

std::vector<double> parse_response(std::string_view body, const ScoreRequest& r) {
  const auto fail = [&](const std::string& what) -> std::vector<double> {
    throw Error(ErrorKind::Backend, "request " + r.request_id + ": " + what);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return fail("response is not JSON");
  }
  if (!j.is_object()) return fail("response is not an object");
  if (!j.contains("request_id") || !j["request_id"].is_string() ||
      j["request_id"].get<std::string>() != r.request_id) {
    return fail("response request_id does not match");
  }
  if (j.contains("error")) return fail("backend error: " + j["error"].dump());
  if (!j.contains("log_scores") || !j["log_scores"].is_array()) return fail("no log_scores");
  const auto& arr = j["log_scores"];
  if (arr.size() != r.expected_scores()) {
    return fail("expected " + std::to_string(r.expected_scores()) + " scores, got " +
                std::to_string(arr.size()));
  }
  std::vector<double> out;
  for (const auto& v : arr) {
    if (v.is_null()) {
      out.push_back(-std::numeric_limits<double>::infinity());
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      return fail("non-numeric score");
    }
  }
  return out;
}

RemoteScorer::RemoteScorer(RemoteOptions opts) : opts_(std::move(opts)) {
  if (opts_.url.empty()) throw Error(ErrorKind::Config, "remote backend needs a URL");
  if (opts_.url.rfind("http://", 0) != 0) {
    throw Error(ErrorKind::Config, "remote backend URL must start with http:// (" + opts_.url + ")");
  }
  while (opts_.url.size() > 7 && opts_.url.back() == '/') opts_.url.pop_back();
}

std::string RemoteScorer::backend() const { return "remote(" + opts_.url + ")"; }

std::vector<double> RemoteScorer::score(const ScoreRequest& r) const {
  validate(r);
  if (transport_failures_.load() >= opts_.breaker_threshold) {
    throw Error(ErrorKind::Backend,
                "request " + r.request_id + ": backend " + opts_.url + " unreachable");
  }
  const std::string body = request_to_json(r).dump();
  const std::string path(endpoint_for(r.mode));
  auto delay = opts_.backoff;
  std::string last;
  bool transport = false;
  for (unsigned attempt = 0; attempt <= opts_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto client = make_client(opts_);
    const auto res = client.Post(path, body, "application/json");
    if (!res) {
      transport = true;
      last = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    transport = false;
    if (res->status == 200) {
      transport_failures_.store(0);
      return parse_response(res->body, r);
    }
    last = "HTTP " + std::to_string(res->status);
    if (!retryable(res->status)) break;
  }
  if (transport) ++transport_failures_;
  throw Error(ErrorKind::Backend, "request " + r.request_id + " to " + opts_.url + path + ": " + last);
}

std::string RemoteScorer::health() const {
  auto client = make_client(opts_);
  const auto res = client.Get("/healthz");
  if (!res) {
    throw Error(ErrorKind::Backend, opts_.url + "/healthz: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::Backend, opts_.url + "/healthz: HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body).at("model").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Backend, opts_.url + "/healthz: " + e.what());
  }
}

}  // namespace spellscope
