#include "spellscope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <tuple>

#include "spellscope/common.hpp"
#include "spellscope/corpus_scan.hpp"

namespace spellscope {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Mean and population std of row entries, two-pass.
struct RowStats {
  std::vector<double> us, uk;
  std::size_t n = 0;

  void add(const RowPair& r) {
    us.push_back(r.second_us);
    uk.push_back(r.second_uk);
    ++n;
  }

  static std::pair<double, double> mean_std(const std::vector<double>& v) {
    CompensatedSum sum;
    for (const double x : v) sum.add(x);
    const double mean = sum.value() / static_cast<double>(v.size());
    CompensatedSum sq;
    for (const double x : v) sq.add((x - mean) * (x - mean));
    return {mean, std::sqrt(sq.value() / static_cast<double>(v.size()))};
  }

  ConditionalRow row() const {
    ConditionalRow out;
    std::tie(out.second_us, out.std_us) = mean_std(us);
    std::tie(out.second_uk, out.std_uk) = mean_std(uk);
    out.support = n;
    return out;
  }
};

std::vector<Condition> conditions_present(std::span<const FourWayScores> groups) {
  bool adj = false, non = false;
  for (const auto& g : groups) (g.condition == Condition::Adjacent ? adj : non) = true;
  std::vector<Condition> out;
  if (adj) out.push_back(Condition::Adjacent);
  if (non) out.push_back(Condition::NonAdjacent);
  return out;
}

}  // namespace

std::optional<RowPair> normalize_pair(double log_us, double log_uk) {
  if (std::isnan(log_us) || std::isnan(log_uk)) return std::nullopt;
  const double m = std::max(log_us, log_uk);
  if (!std::isfinite(m)) return std::nullopt;  // both -inf, or a +inf
  const double a = std::exp(log_us - m);
  const double b = std::exp(log_uk - m);
  return RowPair{a / (a + b), b / (a + b)};
}

std::array<std::optional<RowPair>, 2> normalize_rows(const FourWayScores& s) {
  return {normalize_pair(s.at(Side::US, Side::US), s.at(Side::US, Side::UK)),
          normalize_pair(s.at(Side::UK, Side::US), s.at(Side::UK, Side::UK))};
}

std::optional<JointDistribution> joint_distribution(const FourWayScores& s) {
  double m = -std::numeric_limits<double>::infinity();
  for (const double v : s.log_score) {
    if (std::isnan(v)) return std::nullopt;
    m = std::max(m, v);
  }
  if (!std::isfinite(m)) return std::nullopt;
  std::array<double, 4> e{};
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    e[i] = std::exp(s.log_score[i] - m);
    total += e[i];
  }
  return JointDistribution{e[0] / total, e[1] / total, e[2] / total, e[3] / total};
}

double mutual_information(const JointDistribution& j) {
  const double p[2][2] = {{j.p_us_us, j.p_us_uk}, {j.p_uk_us, j.p_uk_uk}};
  const double px[2] = {p[0][0] + p[0][1], p[1][0] + p[1][1]};
  const double py[2] = {p[0][0] + p[1][0], p[0][1] + p[1][1]};
  double mi = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      if (p[x][y] > 0.0) mi += p[x][y] * std::log(p[x][y] / (px[x] * py[y]));
    }
  }
  return mi;
}

ConditionalTable conditional_table(std::span<const FourWayScores> groups, Condition condition,
                                   bool by_template) {
  ConditionalTable t;
  t.condition = condition;
  t.macro_averaged = by_template;

  std::array<RowStats, 2> micro;
  std::map<std::size_t, std::array<RowStats, 2>> per_template;
  for (const auto& g : groups) {
    if (g.condition != condition) continue;
    if (!g.finite()) {
      ++t.excluded;
      continue;
    }
    const auto rows = normalize_rows(g);
    auto& dst = by_template ? per_template[g.template_id] : micro;
    for (std::size_t s = 0; s < 2; ++s) dst[s].add(*rows[s]);
  }

  if (!by_template) {
    if (micro[0].n > 0) t.us_first = micro[0].row();
    if (micro[1].n > 0) t.uk_first = micro[1].row();
    return t;
  }

  t.template_count = per_template.size();
  std::array<RowStats, 2> across;
  std::array<std::size_t, 2> support{};
  for (const auto& [id, rows] : per_template) {
    for (std::size_t s = 0; s < 2; ++s) {
      const auto r = rows[s].row();
      across[s].add({r.second_us, r.second_uk});
      support[s] += rows[s].n;
    }
  }
  for (std::size_t s = 0; s < 2; ++s) {
    if (across[s].n == 0) continue;
    auto row = across[s].row();
    row.support = support[s];
    (s == 0 ? t.us_first : t.uk_first) = row;
  }
  return t;
}

double AccuracyResult::percent(Side cue) const {
  if (groups == 0) return 0.0;
  return 100.0 * wins[cue == Side::US ? 0 : 1] / static_cast<double>(groups);
}

AccuracyResult accuracy(std::span<const FourWayScores> groups, Condition condition) {
  AccuracyResult r;
  r.condition = condition;
  auto credit = [](double consistent, double inconsistent) {
    if (consistent > inconsistent) return 1.0;
    if (consistent < inconsistent) return 0.0;
    return 0.5;
  };
  CompensatedSum us, uk;
  for (const auto& g : groups) {
    if (g.condition != condition) continue;
    us.add(credit(g.at(Side::US, Side::US), g.at(Side::US, Side::UK)));
    uk.add(credit(g.at(Side::UK, Side::UK), g.at(Side::UK, Side::US)));
    ++r.groups;
  }
  r.wins = {us.value(), uk.value()};
  return r;
}

MIResult average_mi(std::span<const FourWayScores> groups, Condition condition) {
  MIResult r;
  r.condition = condition;
  CompensatedSum total;
  r.min = std::numeric_limits<double>::infinity();
  r.max = -std::numeric_limits<double>::infinity();
  for (const auto& g : groups) {
    if (g.condition != condition) continue;
    const auto joint = g.finite() ? joint_distribution(g) : std::nullopt;
    if (!joint) {
      ++r.excluded;
      continue;
    }
    const double mi = mutual_information(*joint);
    total.add(mi);
    r.min = std::min(r.min, mi);
    r.max = std::max(r.max, mi);
    ++r.groups;
  }
  if (r.groups == 0) {
    r.min = r.max = 0.0;
    return r;
  }
  r.mean = total.value() / static_cast<double>(r.groups);
  return r;
}

MetricsReport compute_metrics(std::span<const FourWayScores> groups, bool by_template,
                              MetricsMetadata meta) {
  MetricsReport r;
  r.meta = std::move(meta);
  r.by_template = by_template;
  for (const auto c : conditions_present(groups)) {
    r.tables.push_back(conditional_table(groups, c, by_template));
    r.accuracy.push_back(accuracy(groups, c));
    r.mi.push_back(average_mi(groups, c));
  }
  return r;
}

std::string render_tsv(const MetricsReport& r) {
  std::string out;
  out += "# backend=" + (r.meta.backend.empty() ? std::string("unknown") : r.meta.backend);
  out += " mode=" + (r.meta.mode.empty() ? std::string("unknown") : r.meta.mode);
  out += " seed=" + (r.meta.seed ? std::to_string(*r.meta.seed) : std::string("NA"));
  if (!r.meta.scores_sha256.empty()) out += " scores_sha256=" + r.meta.scores_sha256;
  out += "\n# log_base=e mi_unit=nats ties=0.5 std=population averaging=";
  out += r.by_template ? "macro_by_template\n" : "micro\n";

  out += "# conditional: P(second word side | cue side)\n";
  out += "condition\tcue\tp_second_US\tp_second_UK";
  if (r.by_template) out += "\tstd_US\tstd_UK\ttemplates";
  out += "\tgroups\texcluded\n";
  for (const auto& t : r.tables) {
    for (const auto cue : {Side::US, Side::UK}) {
      const auto& row = t.row(cue);
      out += std::string(to_string(t.condition)) + "\t" + std::string(to_string(cue));
      if (row) {
        out += "\t" + fixed(row->second_us, 4) + "\t" + fixed(row->second_uk, 4);
        if (r.by_template) {
          out += "\t" + fixed(row->std_us, 4) + "\t" + fixed(row->std_uk, 4) + "\t" +
                 std::to_string(t.template_count);
        }
        out += "\t" + std::to_string(row->support);
      } else {
        out += r.by_template ? "\tNA\tNA\tNA\tNA\t0\t0" : "\tNA\tNA\t0";
      }
      out += "\t" + std::to_string(t.excluded) + "\n";
    }
  }

  out += "# accuracy: percent of groups preferring the consistent spelling\n";
  out += "condition\tcue\taccuracy_pct\tgroups\n";
  for (const auto& a : r.accuracy) {
    for (const auto cue : {Side::US, Side::UK}) {
      out += std::string(to_string(a.condition)) + "\t" + std::string(to_string(cue)) + "\t" +
             (a.groups ? fixed(a.percent(cue), 1) : std::string("NA")) + "\t" +
             std::to_string(a.groups) + "\n";
    }
  }

  out += "# mutual information (nats), mean over groups\n";
  out += "condition\tmean_mi\tgroups\texcluded\n";
  for (const auto& m : r.mi) {
    out += std::string(to_string(m.condition)) + "\t" +
           (m.groups ? fixed(m.mean, 6) : std::string("NA")) + "\t" + std::to_string(m.groups) +
           "\t" + std::to_string(m.excluded) + "\n";
  }
  return out;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json meta;
  meta["backend"] = r.meta.backend;
  meta["mode"] = r.meta.mode;
  meta["seed"] = r.meta.seed ? nlohmann::ordered_json(*r.meta.seed) : nlohmann::ordered_json(nullptr);
  meta["scores_sha256"] = r.meta.scores_sha256;
  meta["log_base"] = "e";
  meta["mi_unit"] = "nats";
  meta["ties"] = 0.5;
  meta["std"] = "population";
  meta["averaging"] = r.by_template ? "macro_by_template" : "micro";

  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const auto& t : r.tables) tables.push_back(to_json(t));
  nlohmann::ordered_json acc = nlohmann::ordered_json::array();
  for (const auto& a : r.accuracy) {
    acc.push_back({{"condition", to_string(a.condition)},
                   {"US", a.groups ? nlohmann::ordered_json(a.percent(Side::US)) : nullptr},
                   {"UK", a.groups ? nlohmann::ordered_json(a.percent(Side::UK)) : nullptr},
                   {"groups", a.groups}});
  }
  nlohmann::ordered_json mi = nlohmann::ordered_json::array();
  for (const auto& m : r.mi) {
    mi.push_back({{"condition", to_string(m.condition)},
                  {"mean", m.groups ? nlohmann::ordered_json(m.mean) : nullptr},
                  {"min", m.min},
                  {"max", m.max},
                  {"groups", m.groups},
                  {"excluded", m.excluded}});
  }
  return {{"metadata", std::move(meta)},
          {"conditional", std::move(tables)},
          {"accuracy", std::move(acc)},
          {"mutual_information", std::move(mi)}};
}

}  // namespace spellscope
