#include "spellscope/scorer.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "spellscope/record_io.hpp"

namespace spellscope {

namespace {

constexpr std::array<std::string_view, 4> kModeNames{"SPAN_FILL_ONE", "SPAN_FILL_TWO",
                                                     "AR_TARGET_ONLY", "AR_TO_EOS"};

ScoreRequest make_request(ScoreMode mode) {
  ScoreRequest r;
  r.mode = mode;
  return r;
}

std::string with_blanks(const ProbeInstance& p, bool blank_cue) {
  std::string s = p.rendered_text;
  s.replace(p.filler_offset, p.filler_word.size(), kBlank);
  if (blank_cue) s.replace(p.cue_offset, p.cue_word.size(), kBlank);
  return s;
}

nlohmann::ordered_json pair_json(const VariantPair& p) {
  return {{"US", p.us}, {"UK", p.uk}, {"rule", to_string(p.rule)}};
}

VariantPair pair_from_json(const nlohmann::json& j) {
  VariantPair p;
  p.us = j.at("US").get<std::string>();
  p.uk = j.at("UK").get<std::string>();
  const auto rule = parse_rule(j.at("rule").get<std::string>());
  if (!rule) throw Error(ErrorKind::DataFormat, "unknown spelling rule");
  p.rule = *rule;
  return p;
}

}  // namespace

std::string_view to_string(ScoreMode m) { return kModeNames[static_cast<std::size_t>(m)]; }

std::optional<ScoreMode> parse_score_mode(std::string_view s) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == s) return static_cast<ScoreMode>(i);
  }
  return std::nullopt;
}

std::size_t count_blanks(std::string_view context) {
  std::size_t n = 0;
  for (auto p = context.find(kBlank); p != std::string_view::npos;
       p = context.find(kBlank, p + kBlank.size())) {
    ++n;
  }
  return n;
}

void validate(const ScoreRequest& r) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::DataFormat,
                "request " + (r.request_id.empty() ? std::string("(no id)") : r.request_id) + ": " +
                    what);
  };
  if (r.candidates.empty()) fail("no candidates");
  for (const auto& c : r.candidates) {
    if (c.find(kBlank) != std::string::npos) fail("candidate contains a blank marker");
  }
  switch (r.mode) {
    case ScoreMode::SpanFillOne:
      if (count_blanks(r.context) != 1) fail("SPAN_FILL_ONE needs exactly one blank");
      break;
    case ScoreMode::SpanFillTwo:
      if (count_blanks(r.context) != 2) fail("SPAN_FILL_TWO needs exactly two blanks");
      if (r.candidates.size() != 2) fail("SPAN_FILL_TWO needs two candidates");
      break;
    case ScoreMode::ArTargetOnly:
    case ScoreMode::ArToEos:
      if (r.prefix.empty()) fail("empty prefix");
      if (r.mode == ScoreMode::ArToEos && !r.suffix) fail("AR_TO_EOS needs a suffix");
      if (r.mode == ScoreMode::ArTargetOnly && r.suffix) fail("AR_TARGET_ONLY takes no suffix");
      break;
  }
}

double Scorer::span_fill_score(std::string_view context, std::string_view candidate) const {
  auto r = make_request(ScoreMode::SpanFillOne);
  r.context = context;
  r.candidates = {std::string(candidate)};
  return score(r).at(0);
}

double Scorer::joint_span_score(std::string_view context, std::string_view cand1,
                                std::string_view cand2) const {
  auto r = make_request(ScoreMode::SpanFillTwo);
  r.context = context;
  r.candidates = {std::string(cand1), std::string(cand2)};
  return score(r).at(0);
}

double Scorer::ar_score(std::string_view prefix, std::string_view target, ScoreMode mode,
                        std::optional<std::string_view> suffix) const {
  if (mode != ScoreMode::ArTargetOnly && mode != ScoreMode::ArToEos) {
    throw Error(ErrorKind::DataFormat, "ar_score needs an AR mode");
  }
  auto r = make_request(mode);
  r.prefix = prefix;
  if (suffix) r.suffix = std::string(*suffix);
  r.candidates = {std::string(target)};
  return score(r).at(0);
}

bool FourWayScores::finite() const {
  for (const double s : log_score) {
    if (!std::isfinite(s)) return false;
  }
  return true;
}

std::vector<ScoreRequest> group_requests(const ProbeSet& set, std::size_t group, ScoreMode mode,
                                         std::string_view id_prefix) {
  const auto inst = set.group_instances(group);
  const auto& filler = set.pairs()[set.group(group).pair_index].filler;
  const std::string id = std::string(id_prefix) + "g" + std::to_string(group) + ".";
  std::vector<ScoreRequest> out;
  if (mode == ScoreMode::SpanFillTwo) {
    const auto ctx = with_blanks(inst[0], true);
    for (std::size_t s = 0; s < 4; ++s) {
      auto r = make_request(mode);
      r.context = ctx;
      r.candidates = {inst[s].cue_word, inst[s].filler_word};
      r.request_id = id + std::to_string(s);
      out.push_back(std::move(r));
    }
    return out;
  }
  // One request per cue side; both filler spellings are alternatives.
  for (const std::size_t s : {std::size_t{0}, std::size_t{2}}) {
    auto r = make_request(mode);
    if (mode == ScoreMode::SpanFillOne) {
      r.context = with_blanks(inst[s], false);
    } else {
      r.prefix = inst[s].prefix();
      if (mode == ScoreMode::ArToEos) r.suffix = std::string(inst[s].suffix());
    }
    r.candidates = {filler.us, filler.uk};
    r.request_id = id + std::to_string(s / 2);
    out.push_back(std::move(r));
  }
  return out;
}

FourWayScores score_group(const Scorer& scorer, const ProbeSet& set, std::size_t group,
                          ScoreMode mode) {
  const auto key = set.group(group);
  const auto& pc = set.pairs()[key.pair_index];
  FourWayScores out;
  out.group = group;
  out.template_id = set.templates()[key.template_index].id;
  out.pair_id = key.pair_index;
  out.condition = key.condition;
  out.cue = pc.cue;
  out.filler = pc.filler;
  out.same_lexeme = pc.same_lexeme;

  const auto requests = group_requests(set, group, mode);
  std::size_t slot = 0;
  for (const auto& r : requests) {
    const auto scores = scorer.score(r);
    if (scores.size() != r.expected_scores()) {
      throw Error(ErrorKind::Backend, "request " + r.request_id + ": wrong number of scores");
    }
    for (const double s : scores) out.log_score.at(slot++) = s;
  }
  return out;
}

nlohmann::ordered_json to_json(const FourWayScores& s) {
  nlohmann::ordered_json scores = nlohmann::ordered_json::array();
  for (const double v : s.log_score) {
    if (v == -std::numeric_limits<double>::infinity() || std::isnan(v)) {
      scores.push_back(nullptr);
    } else {
      scores.push_back(v);
    }
  }
  return {{"group", s.group},
          {"template_id", s.template_id},
          {"pair_id", s.pair_id},
          {"condition", to_string(s.condition)},
          {"cue", pair_json(s.cue)},
          {"filler", pair_json(s.filler)},
          {"same_lexeme", s.same_lexeme},
          {"log_scores", std::move(scores)}};
}

FourWayScores scores_from_json(const nlohmann::json& j) {
  try {
    FourWayScores s;
    s.group = j.at("group").get<std::size_t>();
    s.template_id = j.at("template_id").get<std::size_t>();
    s.pair_id = j.at("pair_id").get<std::size_t>();
    const auto cond = parse_condition(j.at("condition").get<std::string>());
    if (!cond) throw Error(ErrorKind::DataFormat, "unknown condition");
    s.condition = *cond;
    s.cue = pair_from_json(j.at("cue"));
    s.filler = pair_from_json(j.at("filler"));
    s.same_lexeme = j.at("same_lexeme").get<bool>();
    const auto& scores = j.at("log_scores");
    if (!scores.is_array() || scores.size() != 4) {
      throw Error(ErrorKind::DataFormat, "log_scores must hold four values");
    }
    for (std::size_t i = 0; i < 4; ++i) {
      s.log_score[i] = scores[i].is_null() ? -std::numeric_limits<double>::infinity()
                                           : scores[i].get<double>();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataFormat, e.what());
  }
}

std::vector<FourWayScores> parse_scores(std::string_view jsonl) {
  std::vector<FourWayScores> out;
  auto lines = memory_records(std::string(jsonl));
  std::string line;
  while (lines->next(line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(scores_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::DataFormat,
                  "score file line " + std::to_string(lines->position()) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::DataFormat,
                  "score file line " + std::to_string(lines->position()) + ": " + e.what());
    }
  }
  if (out.empty()) throw Error(ErrorKind::DataFormat, "score file has no groups");
  return out;
}

std::vector<FourWayScores> read_scores(const std::filesystem::path& path) {
  return parse_scores(read_file(path));
}

ScoreRunReport score_probe_set(const Scorer& scorer, const ProbeSet& set, ScoreMode mode,
                               const ScoreRunOptions& opts,
                               const std::function<void(const FourWayScores&)>& sink,
                               const std::function<bool(std::size_t)>& wanted) {
  ScoreRunReport report;
  std::vector<std::size_t> todo;
  for (std::size_t g = 0; g < set.group_count(); ++g) {
    if (!wanted || wanted(g)) {
      todo.push_back(g);
    } else {
      ++report.skipped;
    }
  }
  if (opts.limit && *opts.limit < todo.size()) {
    todo.resize(*opts.limit);
    report.interrupted = true;
  }

  const std::size_t batch = std::max<std::size_t>(opts.batch_groups, 1);
  std::vector<std::optional<FourWayScores>> results;
  std::vector<std::string> errors;
  for (std::size_t start = 0; start < todo.size(); start += batch) {
    const std::size_t n = std::min(batch, todo.size() - start);
    results.assign(n, std::nullopt);
    errors.assign(n, {});
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          results[i] = score_group(scorer, set, todo[start + i], mode);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(opts.workers, 1u), n));
    if (threads <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (results[i]) {
        sink(*results[i]);
        ++report.scored;
      } else {
        report.failures.push_back({todo[start + i], errors[i]});
      }
    }
    if (opts.progress) opts.progress(start + n, todo.size());
  }
  return report;
}

std::vector<FourWayScores> score_all(const Scorer& scorer, const ProbeSet& set, ScoreMode mode,
                                     const ScoreRunOptions& opts) {
  std::vector<FourWayScores> out;
  out.reserve(set.group_count());
  const auto report =
      score_probe_set(scorer, set, mode, opts, [&](const FourWayScores& s) { out.push_back(s); });
  if (!report.failures.empty()) {
    throw Error(ErrorKind::Backend, std::to_string(report.failures.size()) +
                                        " groups failed; first: " + report.failures[0].message);
  }
  return out;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out) {
  auto p = out;
  p += ".partial";
  return p;
}

ScoreRunReport score_to_file(const Scorer& scorer, const ProbeSet& set, ScoreMode mode,
                             const std::filesystem::path& out, const ScoreRunOptions& opts) {
  const auto cp = checkpoint_path(out);
  std::map<std::size_t, std::string> lines;

  if (std::filesystem::exists(cp)) {
    const auto text = read_file(cp);
    auto stream = memory_records(text);
    std::string line;
    std::vector<std::string> raw;
    while (stream->next(line)) raw.push_back(line);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      FourWayScores s;
      try {
        s = scores_from_json(nlohmann::json::parse(raw[i]));
      } catch (const std::exception& e) {
        // A torn final line is what an interrupted write leaves behind.
        if (i + 1 == raw.size() && (text.empty() || text.back() != '\n')) break;
        throw Error(ErrorKind::DataFormat,
                    cp.string() + " line " + std::to_string(i + 1) + ": " + e.what());
      }
      const bool matches = s.group < set.group_count() && [&] {
        const auto key = set.group(s.group);
        const auto& pc = set.pairs()[key.pair_index];
        return s.condition == key.condition && s.pair_id == key.pair_index &&
               s.template_id == set.templates()[key.template_index].id && s.cue == pc.cue &&
               s.filler == pc.filler;
      }();
      if (!matches) {
        throw Error(ErrorKind::DataFormat, cp.string() + " line " + std::to_string(i + 1) +
                                               ": checkpoint does not match this probe set");
      }
      lines[s.group] = raw[i];
    }
  }

  std::string kept;
  for (const auto& [g, l] : lines) kept += l + "\n";
  write_file(cp, kept);

  std::ofstream append(cp, std::ios::app | std::ios::binary);
  if (!append) throw Error(ErrorKind::Io, "cannot append to " + cp.string());
  auto report = score_probe_set(
      scorer, set, mode, opts,
      [&](const FourWayScores& s) {
        auto line = to_json(s).dump();
        append << line << '\n';
        lines.emplace(s.group, std::move(line));
      },
      [&](std::size_t g) { return !lines.contains(g); });
  append.flush();
  if (!append) throw Error(ErrorKind::Io, "write failed on " + cp.string());
  append.close();

  if (report.ok() && lines.size() == set.group_count()) {
    std::string all;
    for (const auto& [g, l] : lines) {
      all += l;
      all += '\n';
    }
    write_file(out, all);
    std::filesystem::remove(cp);
  }
  return report;
}

}  // namespace spellscope
