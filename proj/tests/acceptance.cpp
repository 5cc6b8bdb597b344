// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "spellscope/corpus_scan.hpp"
#include "spellscope/debias.hpp"
#include "spellscope/metrics.hpp"
#include "spellscope/ngram.hpp"
#include "spellscope/prompt_forge.hpp"
#include "spellscope/record_io.hpp"
#include "spellscope/scorer.hpp"

using namespace spellscope;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned hw_threads() { return std::max(2u, std::thread::hardware_concurrency()); }

// 1 -------------------------------------------------------------------------
Outcome pair_oracle() {
  const auto t0 = Clock::now();
  const auto lex = fixture::mini_lexicon();
  oracle::RecordGenerator gen(lex, 20240601);
  std::vector<std::string> records;
  for (int i = 0; i < 1000; ++i) records.push_back(gen.record(200, 20));

  std::size_t mismatching = 0;
  for (const auto& r : records) {
    const auto got = count_pairs(normalize_record(r), lex);
    if (!(got == oracle::brute_force_counts(oracle::split_words(r), lex))) ++mismatching;
  }
  ConsistencyCounts expected;
  for (const auto& r : records) expected += oracle::brute_force_counts(oracle::split_words(r), lex);
  const auto scanned = scan(std::span<const std::string>(records), lex, {.workers = 4});
  const double secs = seconds_since(t0);
  const bool ok = mismatching == 0 && scanned.counts == expected && secs < 10.0;
  return {ok, "1000 records, " + std::to_string(expected.all().total()) + " pairs, " +
                  std::to_string(mismatching) + " differing records, " + fmt("%.2f s", secs)};
}

// 2 -------------------------------------------------------------------------
Outcome planted_rates() {
  const auto lex = fixture::mini_lexicon();
  std::mt19937_64 rng(746147108);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static const std::vector<std::string> kNeutral{"the", "tree", "of", "sky", "desk", "a", "jump"};
  std::vector<std::string> records;
  const std::size_t n = 120'000;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng);
    Side first, second;
    if (x < 0.746) {
      first = second = Side::US;
    } else if (x < 0.746 + 0.147) {
      first = second = Side::UK;
    } else {
      first = rng() % 2 ? Side::US : Side::UK;
      second = other(first);
    }
    std::string rec = kNeutral[rng() % kNeutral.size()] + " " + lex[rng() % lex.size()].form(first);
    for (std::size_t k = rng() % 3; k > 0; --k) rec += " " + kNeutral[rng() % kNeutral.size()];
    rec += " " + lex[rng() % lex.size()].form(second) + ".";
    records.push_back(std::move(rec));
  }
  const auto res = scan(std::span<const std::string>(records), lex, {.workers = hw_threads()});
  const auto rep = report(res.counts);
  const double us = rep.pct_us_tenths / 10.0, uk = rep.pct_uk_tenths / 10.0,
               mis = rep.pct_mis_tenths / 10.0;
  const bool ok = rep.total_pairs >= 100'000 && std::abs(us - 74.6) <= 0.5 &&
                  std::abs(uk - 14.7) <= 0.5 && std::abs(mis - 10.8) <= 0.5;
  return {ok, std::to_string(rep.total_pairs) + " pairs -> " + fmt("%.1f", us) + "/" +
                  fmt("%.1f", uk) + "/" + fmt("%.1f", mis) + " (planted 74.6/14.7/10.8)"};
}

// 3 -------------------------------------------------------------------------
Outcome shard_invariance() {
  const auto lex = fixture::mini_lexicon();
  oracle::RecordGenerator gen(lex, 3);
  std::vector<std::string> records;
  for (int i = 0; i < 3000; ++i) records.push_back(gen.record(80, 10));
  const auto whole = scan(std::span<const std::string>(records), lex).counts;

  std::mt19937_64 rng(33);
  int trials = 0, failures = 0;
  for (const std::size_t ways : {1u, 2u, 8u}) {
    for (int t = 0; t < 5; ++t, ++trials) {
      std::vector<std::size_t> cuts{0, records.size()};
      for (std::size_t k = 1; k < ways; ++k) cuts.push_back(rng() % (records.size() + 1));
      std::sort(cuts.begin(), cuts.end());
      ConsistencyCounts merged;
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const std::span<const std::string> shard(records.data() + cuts[k], cuts[k + 1] - cuts[k]);
        merged = merge(merged, scan(shard, lex, {.workers = 1 + static_cast<unsigned>(k % 3)}).counts);
      }
      if (!(merged == whole)) ++failures;
    }
  }
  return {failures == 0, std::to_string(trials) + " random 1/2/8-way splits, " +
                             std::to_string(failures) + " mismatches"};
}

// 4 -------------------------------------------------------------------------
NGramModel small_model() {
  return train_ngram(fixture::list_sentences(fixture::mini_lexicon(), 200, 4));
}

Outcome probe_cardinality() {
  const auto model = small_model();

  const auto t0 = Clock::now();
  const auto mini = fixture::mini_lexicon();
  const auto smoke = build_probe_set(default_templates(), sample_pairs(mini, 7, 1),
                                     {Condition::Adjacent}, mini, 1);
  std::size_t smoke_groups = 0;
  const auto smoke_run = score_probe_set(model, smoke, ScoreMode::SpanFillOne, {.workers = 2},
                                         [&](const FourWayScores&) { ++smoke_groups; });
  const double smoke_secs = seconds_since(t0);

  const auto lex = fixture::synthetic_lexicon(1266);
  const auto set = build_probe_set(default_templates(), sample_pairs(lex, 16'028, 2024),
                                   {Condition::Adjacent, Condition::NonAdjacent}, lex, 2024);
  std::array<std::size_t, 2> per_condition{};
  std::size_t last = 0;
  bool ordered = true;
  const auto t1 = Clock::now();
  const auto run = score_probe_set(model, set, ScoreMode::SpanFillOne, {.workers = hw_threads()},
                                   [&](const FourWayScores& s) {
                                     if (s.group != 0 && s.group != last + 1) ordered = false;
                                     last = s.group;
                                     ++per_condition[s.condition == Condition::Adjacent ? 0 : 1];
                                   });
  const double full_secs = seconds_since(t1);
  const bool ok = smoke_run.ok() && smoke_groups == 203 && smoke_secs < 5.0 && run.ok() &&
                  ordered && per_condition[0] == 464'812 && per_condition[1] == 464'812;
  return {ok, "16028 x 29 -> " + std::to_string(per_condition[0]) + " adjacent / " +
                  std::to_string(per_condition[1]) + " nonadjacent groups scored (" +
                  fmt("%.1f s", full_secs) + "); smoke 7 x 29 -> " + std::to_string(smoke_groups) +
                  " groups in " + fmt("%.3f s", smoke_secs)};
}

// 5 -------------------------------------------------------------------------
FourWayScores four(double a, double b, double c, double d, std::size_t tmpl = 0) {
  FourWayScores s;
  s.template_id = tmpl;
  s.log_score = {a, b, c, d};
  return s;
}

FourWayScores from_joint(double a, double b, double c, double d) {
  return four(std::log(a), std::log(b), std::log(c), std::log(d));
}

Outcome metrics_kernels() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(-20.0, 6.0);
  double worst_row = 0.0;
  std::vector<FourWayScores> groups;
  for (int i = 0; i < 5000; ++i) groups.push_back(four(z(rng), z(rng), z(rng), z(rng), i % 29));
  for (const auto& g : groups) {
    for (const auto& row : normalize_rows(g)) {
      worst_row = std::max(worst_row, std::abs(row->second_us + row->second_uk - 1.0));
    }
  }
  for (const bool by_template : {false, true}) {
    const auto t = conditional_table(groups, Condition::Adjacent, by_template);
    for (const auto cue : {Side::US, Side::UK}) {
      worst_row = std::max(worst_row, std::abs(t.row(cue)->second_us + t.row(cue)->second_uk - 1.0));
    }
  }

  double worst_factorized = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const double q = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const auto j = joint_distribution(from_joint(p * q, p * (1 - q), (1 - p) * q, (1 - p) * (1 - q)));
    worst_factorized = std::max(worst_factorized, std::abs(mutual_information(*j)));
  }
  const double ln2_err =
      std::abs(mutual_information({0.5, 0.0, 0.0, 0.5}) - std::log(2.0));
  const double mi_oracle = oracle::mutual_information(0.4, 0.1, 0.1, 0.4);
  const double mi = mutual_information(*joint_distribution(from_joint(0.4, 0.1, 0.1, 0.4)));
  const double mi_err = std::abs(mi - 0.192745);

  int invariant = 0;
  for (int set = 0; set < 100; ++set) {
    std::vector<FourWayScores> raw;
    std::uniform_int_distribution<int> coarse(-6, 0);  // ties happen
    for (int i = 0; i < 200; ++i) raw.push_back(four(coarse(rng), coarse(rng), coarse(rng), coarse(rng)));
    const std::vector<std::function<double(double)>> transforms{
        [](double x) { return 3.0 * x + 7.0; }, [](double x) { return std::exp(x); },
        [](double x) { return x * x * x; }, [](double x) { return std::atan(x) - 100.0; }};
    const auto base = accuracy(raw, Condition::Adjacent);
    bool same = true;
    for (const auto& f : transforms) {
      auto moved = raw;
      for (auto& g : moved) {
        for (auto& v : g.log_score) v = f(v);
      }
      const auto a = accuracy(moved, Condition::Adjacent);
      same = same && a.wins == base.wins && a.groups == base.groups;
    }
    invariant += same ? 1 : 0;
  }

  const bool ok = worst_row <= 1e-9 && worst_factorized < 1e-9 && ln2_err <= 1e-9 &&
                  mi_err <= 1e-6 && std::abs(mi - mi_oracle) <= 1e-12 && invariant == 100;
  return {ok, "row sum err " + fmt("%.1e", worst_row) + ", factorized MI " +
                  fmt("%.1e", worst_factorized) + ", |MI - ln2| " + fmt("%.1e", ln2_err) +
                  ", MI(0.4,0.1,0.1,0.4) = " + fmt("%.6f", mi) + ", accuracy invariant on " +
                  std::to_string(invariant) + "/100 sets"};
}

// 6 -------------------------------------------------------------------------
struct ProbeSummary {
  ConditionalTable table;
  AccuracyResult acc;
  MIResult mi;
};

ProbeSummary probe_model(const NGramModel& model, const ProbeSet& set) {
  const auto scores = score_all(model, set, ScoreMode::SpanFillOne, {.workers = hw_threads()});
  return {conditional_table(scores, Condition::Adjacent), accuracy(scores, Condition::Adjacent),
          average_mi(scores, Condition::Adjacent)};
}

std::string describe(const ProbeSummary& s) {
  return "P(US|US)=" + fmt("%.3f", s.table.us_first->second_us) +
         " P(UK|US)=" + fmt("%.3f", s.table.us_first->second_uk) +
         " P(US|UK)=" + fmt("%.3f", s.table.uk_first->second_us) +
         " P(UK|UK)=" + fmt("%.3f", s.table.uk_first->second_uk) +
         " acc=" + fmt("%.1f", s.acc.percent(Side::US)) + "/" + fmt("%.1f", s.acc.percent(Side::UK)) +
         " MI=" + fmt("%.4f", s.mi.mean);
}

Outcome consistency_learning() {
  const auto t0 = Clock::now();
  const auto lex = fixture::mini_lexicon();
  const auto sources = fixture::list_sentences(lex, 30'000, 66);
  VectorRecordWriter train, validation;
  build_synthetic([&] { return std::make_unique<VectorRecordStream>(sources); }, lex, train,
                  validation, {.validation_size = 256, .seed = 6, .workers = hw_threads()});
  const auto consistent = train_ngram(train.records, {.order = 3, .k = 0.1});

  ChaChaRng rng(606);
  std::vector<std::string> shuffled;
  shuffled.reserve(train.records.size());
  for (const auto& r : train.records) shuffled.push_back(scramble_sides(r, lex, rng));
  const auto control = train_ngram(shuffled, {.order = 3, .k = 0.1});

  const auto set = build_probe_set(default_templates(), sample_pairs(lex, 300, 61),
                                   {Condition::Adjacent}, lex, 61);
  const auto a = probe_model(consistent, set);
  const auto b = probe_model(control, set);
  const double secs = seconds_since(t0);

  const bool learned = a.table.us_first->second_us >= 0.9 && a.table.uk_first->second_uk >= 0.9 &&
                       a.acc.percent(Side::US) >= 95.0 && a.acc.percent(Side::UK) >= 95.0;
  bool flat = b.mi.mean < 0.01;
  for (const auto& row : {*b.table.us_first, *b.table.uk_first}) {
    flat = flat && std::abs(row.second_us - 0.5) <= 0.05 && std::abs(row.second_uk - 0.5) <= 0.05;
  }
  const bool ok = learned && flat && secs < 120.0 && train.records.size() >= 50'000;
  return {ok, std::to_string(train.records.size()) + " sentences; consistent: " + describe(a) +
                  "; control: " + describe(b) + "; " + fmt("%.1f s", secs)};
}

// 7 -------------------------------------------------------------------------
Outcome debias_correctness() {
  const auto lex = fixture::mini_lexicon();
  std::string detail;
  bool ok = true;
  for (const auto& [sources, validation_size] :
       {std::pair<std::size_t, std::uint64_t>{2'000, 256}, {20'000, 2'560}}) {
    auto corpus = fixture::list_sentences(lex, sources, sources);
    corpus.push_back("plain text with no variants");
    VectorRecordWriter train, validation;
    const auto m = build_synthetic([&] { return std::make_unique<VectorRecordStream>(corpus); }, lex,
                                   train, validation,
                                   {.validation_size = validation_size, .seed = 7, .workers = 4});
    std::vector<std::string> all = train.records;
    all.insert(all.end(), validation.records.begin(), validation.records.end());
    VectorRecordStream in(all);
    const auto v = verify_consistency(in, lex);
    const bool here = v.counts.all().mismatched() == 0 &&
                      v.counts.all().us_matched == v.counts.all().uk_matched && v.ok() &&
                      validation.records.size() == validation_size &&
                      train.records.size() == 2 * m.qualifying_sources - validation_size;
    ok = ok && here;
    if (!detail.empty()) detail += "; ";
    detail += std::to_string(all.size()) + " records: mismatched=" +
              std::to_string(v.counts.all().mismatched()) +
              " us_matched=" + std::to_string(v.counts.all().us_matched) +
              " uk_matched=" + std::to_string(v.counts.all().uk_matched) +
              " validation=" + std::to_string(validation.records.size());
  }
  return {ok, detail};
}

// 8 -------------------------------------------------------------------------
int cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Outcome determinism() {
  fixture::TempDir dir;
  const auto lex_path = std::string(SPELLSCOPE_TEST_DATA) + "/mini_lexicon.json";
  const auto lex = fixture::mini_lexicon();
  std::string corpus;
  for (const auto& s : fixture::list_sentences(lex, 3000, 8)) corpus += s + "\n";
  write_file(dir / "corpus.txt", corpus);
  if (cli_run({"train-ngram", dir / "corpus.txt", "--out", dir / "model.txt"}) != 0) {
    return {false, "train-ngram failed"};
  }

  const std::vector<std::string> outputs{"scores.jsonl", "scores.jsonl.manifest.json",
                                         "probes.jsonl", "train.txt", "validation.txt.gz",
                                         "train.txt.manifest.json"};
  auto run_all = [&](const std::string& workers) -> std::vector<std::string> {
    const int p = cli_run({"probe", "--lexicon", lex_path, "--seed", "8", "--pairs", "50",
                           "--model", dir / "model.txt", "--out", dir / "scores.jsonl",
                           "--probes-out", dir / "probes.jsonl", "--workers", workers});
    const int d = cli_run({"debias", dir / "corpus.txt", "--lexicon", lex_path, "--seed", "8",
                           "--validation", "256", "--train-out", dir / "train.txt",
                           "--validation-out", dir / "validation.txt.gz", "--workers", workers});
    if (p != 0 || d != 0) return {};
    std::vector<std::string> contents;
    for (const auto& f : outputs) contents.push_back(read_file(dir / f));
    return contents;
  };
  const auto first = run_all("1");
  const auto second = run_all("1");
  const auto third = run_all("7");
  const bool ok = !first.empty() && first == second && first == third;
  std::size_t bytes = 0;
  for (const auto& c : first) bytes += c.size();
  return {ok, std::to_string(outputs.size()) + " probe/debias outputs (" + std::to_string(bytes) +
                  " bytes) identical across 3 runs, workers 1/1/7"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"pair-extraction oracle equivalence", pair_oracle},
      {"planted-rate recovery", planted_rates},
      {"shard invariance", shard_invariance},
      {"probe-set cardinality", probe_cardinality},
      {"metrics kernels", metrics_kernels},
      {"end-to-end consistency learning", consistency_learning},
      {"debiaser correctness", debias_correctness},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << i + 1 << " [" << criteria[i].first << "]: "
              << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
