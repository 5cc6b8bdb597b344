#include "cli.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spellscope/corpus_scan.hpp"
#include "spellscope/debias.hpp"
#include "spellscope/digest.hpp"
#include "spellscope/lexicon.hpp"
#include "spellscope/metrics.hpp"
#include "spellscope/ngram.hpp"
#include "spellscope/prompt_forge.hpp"
#include "spellscope/record_io.hpp"
#include "spellscope/remote.hpp"
#include "spellscope/scorer.hpp"

namespace spellscope::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kManifestFormat = 1;

struct LexiconArgs {
  std::string path;
  bool rule_filter = false;
};

struct BackendArgs {
  std::string backend;  // ngram | remote, inferred when empty
  std::string model;
  std::string url;
  std::string mode = "SPAN_FILL_ONE";
  unsigned workers = 8;
  std::size_t batch = 4096;
  unsigned timeout_ms = 30'000;
};

struct Output {
  std::string out;
  bool json = false;
  std::string manifest;
};

struct ScanArgs {
  std::vector<std::string> corpora;
  LexiconArgs lex;
  std::string granularity = "line";
  std::string counts_out;
  unsigned workers = 1;
  std::size_t pair_cap = kDefaultPairCap;
  Output output;
};

struct ReportArgs {
  std::vector<std::string> counts;
  std::string corpus = "corpus";
  std::string granularity = "line";
  Output output;
};

struct ProbeArgs {
  LexiconArgs lex;
  std::uint64_t seed = 0;
  std::uint64_t pairs = 16'028;
  std::uint64_t cues = 100;  // nonce-probe only
  std::string templates = "default";
  std::string condition = "both";
  std::string out;
  std::string probes_out;
  std::string manifest;
  bool json = false;
  bool export_nonce = false;
  BackendArgs backend;
};

struct MetricsArgs {
  std::string scores;
  bool by_template = false;
  Output output;
};

struct DebiasArgs {
  std::string corpus;
  LexiconArgs lex;
  std::uint64_t seed = 0;
  std::uint64_t validation = 0;
  std::string train_out;
  std::string validation_out;
  std::string granularity = "line";
  unsigned workers = 1;
  Output output;
};

struct TrainArgs {
  std::vector<std::string> corpora;
  std::string out;
  std::string granularity = "line";
  unsigned order = 3;
  double k = 0.1;
  std::string manifest;
};

class Manifest {
 public:
  explicit Manifest(std::string_view command) {
    j_["tool"] = "spellscope";
    j_["version"] = SPELLSCOPE_VERSION;
    j_["formats"] = {{"manifest", kManifestFormat}, {"scores", 1}, {"ngram", 1}};
    j_["command"] = command;
    j_["config"] = Json::object();
    j_["inputs"] = Json::array();
    j_["outputs"] = Json::array();
  }

  Json& config() { return j_["config"]; }
  Json& result() { return j_["result"]; }
  void input(const fs::path& p) { j_["inputs"].push_back(entry(p)); }
  void output(const fs::path& p) { j_["outputs"].push_back(entry(p)); }

  void write(const fs::path& p) const { write_file(p, j_.dump(2) + "\n"); }

 private:
  static Json entry(const fs::path& p) {
    if (p == "-") return {{"path", "-"}, {"sha256", nullptr}};
    return {{"path", p.generic_string()}, {"sha256", sha256_file(p)}};
  }
  Json j_;
};

fs::path sidecar(const fs::path& p) {
  auto m = p;
  m += ".manifest.json";
  return m;
}

/// Appends several record streams.
class ConcatStream final : public RecordStream {
 public:
  ConcatStream(std::vector<std::string> paths, Granularity g) : paths_(std::move(paths)), g_(g) {}

  bool next(std::string& record) override {
    while (true) {
      if (!cur_) {
        if (at_ == paths_.size()) return false;
        cur_ = open_records(paths_[at_++], g_);
      }
      if (cur_->next(record)) {
        ++pos_;
        return true;
      }
      cur_.reset();
    }
  }
  std::uint64_t position() const override { return pos_; }

 private:
  std::vector<std::string> paths_;
  Granularity g_;
  std::size_t at_ = 0;
  std::unique_ptr<RecordStream> cur_;
  std::uint64_t pos_ = 0;
};

Granularity granularity_of(const std::string& s) {
  const auto g = parse_granularity(s);
  if (!g) throw Error(ErrorKind::Config, "--granularity: expected line, paragraph or document");
  return *g;
}

VariantLexicon load_lex(const LexiconArgs& a) {
  if (!fs::exists(a.path)) throw Error(ErrorKind::Config, "--lexicon: no such file: " + a.path);
  auto lex = load_lexicon(a.path);
  return a.rule_filter ? rule_filtered(lex) : lex;
}

std::vector<PromptTemplate> load_tpl(const std::string& arg, const VariantLexicon& lex) {
  if (arg == "default") return default_templates();
  if (!fs::exists(arg)) throw Error(ErrorKind::Config, "--templates: no such file: " + arg);
  return load_templates(arg, &lex);
}

std::vector<Condition> conditions_of(const std::string& s) {
  if (s == "both") return {Condition::Adjacent, Condition::NonAdjacent};
  const auto c = parse_condition(s);
  if (!c) throw Error(ErrorKind::Config, "--condition: expected adjacent, nonadjacent or both");
  return {*c};
}

std::unique_ptr<Scorer> make_scorer(const BackendArgs& a) {
  std::string kind = a.backend;
  if (kind.empty()) kind = !a.model.empty() ? "ngram" : !a.url.empty() ? "remote" : "";
  if (kind == "ngram") {
    if (a.model.empty()) throw Error(ErrorKind::Config, "--model is required for the ngram backend");
    if (!fs::exists(a.model)) throw Error(ErrorKind::Config, "--model: no such file: " + a.model);
    return std::make_unique<NGramModel>(NGramModel::load(a.model));
  }
  if (kind == "remote") {
    if (a.url.empty()) {
      throw Error(ErrorKind::Config, "--url or SPELLSCOPE_BACKEND_URL is required for the remote backend");
    }
    RemoteOptions o;
    o.url = a.url;
    o.timeout = std::chrono::milliseconds(a.timeout_ms);
    return std::make_unique<RemoteScorer>(o);
  }
  if (kind.empty()) throw Error(ErrorKind::Config, "no backend: pass --model or --url");
  throw Error(ErrorKind::Config, "--backend: expected ngram or remote");
}

ScoreMode mode_of(const std::string& s) {
  const auto m = parse_score_mode(s);
  if (!m) {
    throw Error(ErrorKind::Config,
                "--mode: expected SPAN_FILL_ONE, SPAN_FILL_TWO, AR_TARGET_ONLY or AR_TO_EOS");
  }
  return *m;
}

void emit(const Output& o, const std::string& text, std::ostream& out) {
  if (o.out.empty() || o.out == "-") {
    out << text;
  } else {
    write_file(o.out, text);
  }
}

Json backend_config(const BackendArgs& a, const Scorer& scorer) {
  Json j;
  j["backend"] = scorer.backend();
  j["model"] = a.model.empty() ? Json(nullptr) : Json(a.model);
  j["url"] = a.url.empty() ? Json(nullptr) : Json(a.url);
  j["mode"] = a.mode;
  return j;
}

void add_backend_options(CLI::App* app, BackendArgs& a) {
  app->add_option("--backend", a.backend, "ngram or remote (inferred from --model / --url)");
  app->add_option("--model", a.model, "n-gram model file from train-ngram");
  app->add_option("--url", a.url, "remote scoring service, http://host:port")
      ->envname("SPELLSCOPE_BACKEND_URL");
  app->add_option("--mode", a.mode, "SPAN_FILL_ONE, SPAN_FILL_TWO, AR_TARGET_ONLY, AR_TO_EOS")
      ->capture_default_str();
  app->add_option("--workers", a.workers, "concurrent scoring requests")->capture_default_str();
  app->add_option("--batch", a.batch, "groups per checkpoint batch")->capture_default_str();
  app->add_option("--timeout-ms", a.timeout_ms, "remote request timeout")->capture_default_str();
}

void add_lexicon_options(CLI::App* app, LexiconArgs& a) {
  app->add_option("--lexicon", a.path, "American->British JSON dictionary")->required();
  app->add_flag("--rule-filter", a.rule_filter, "keep only pairs with a known spelling rule");
}

int report_failures(const ScoreRunReport& r, std::size_t total, std::ostream& err) {
  err << "error: " << r.failures.size() << " of " << total << " groups failed\n";
  const std::size_t shown = std::min<std::size_t>(r.failures.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    err << "  group " << r.failures[i].group << ": " << r.failures[i].message << "\n";
  }
  if (r.failures.size() > shown) err << "  ... and " << r.failures.size() - shown << " more\n";
  return static_cast<int>(ErrorKind::Backend);
}

std::string kv_lines(const Json& j) {
  std::string s;
  for (const auto& [k, v] : j.items()) {
    s += k + "\t" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  }
  return s;
}

// --- commands ---------------------------------------------------------------

int cmd_scan(const ScanArgs& a, std::ostream& out, std::ostream& err) {
  const auto lex = load_lex(a.lex);
  const auto g = granularity_of(a.granularity);
  ScanOptions opts;
  opts.workers = a.workers;
  opts.pair_cap = a.pair_cap;

  ScanResult total;
  for (const auto& p : a.corpora) {
    auto in = open_records(p, g);
    const auto r = scan(*in, lex, opts);
    total.counts += r.counts;
    total.diagnostics += r.diagnostics;
    err << "scan: " << p << ": " << r.diagnostics.records << " records\n";
  }
  std::string name;
  for (const auto& p : a.corpora) name += (name.empty() ? "" : ",") + fs::path(p).filename().string();
  const auto rep = report(total.counts, name, g);
  emit(a.output, a.output.json ? report_json(rep, total.counts, &total.diagnostics).dump(2) + "\n"
                               : render_tsv(rep),
       out);
  if (!a.counts_out.empty()) write_file(a.counts_out, to_json(total.counts).dump(2) + "\n");

  const std::string mpath = !a.output.manifest.empty() ? a.output.manifest
                            : !a.output.out.empty()    ? sidecar(a.output.out).string()
                            : !a.counts_out.empty()    ? sidecar(a.counts_out).string()
                                                       : std::string();
  if (mpath.empty()) return 0;
  Manifest m("scan");
  m.config() = {{"lexicon", a.lex.path},     {"rule_filter", a.lex.rule_filter},
                {"granularity", a.granularity}, {"pair_cap", a.pair_cap},
                {"json", a.output.json}};
  for (const auto& p : a.corpora) m.input(p);
  m.input(a.lex.path);
  if (!a.output.out.empty()) m.output(a.output.out);
  if (!a.counts_out.empty()) m.output(a.counts_out);
  m.result() = report_json(rep, total.counts, &total.diagnostics);
  m.write(mpath);
  return 0;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  ConsistencyCounts total;
  for (const auto& p : a.counts) {
    Json j;
    try {
      j = Json::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::DataFormat, p + ": " + e.what());
    }
    total += counts_from_json(j.contains("counts") ? j.at("counts") : j);
  }
  const auto rep = report(total, a.corpus, granularity_of(a.granularity));
  emit(a.output, a.output.json ? report_json(rep, total).dump(2) + "\n" : render_tsv(rep), out);

  const fs::path mpath = !a.output.manifest.empty() ? fs::path(a.output.manifest)
                         : !a.output.out.empty()    ? sidecar(a.output.out)
                                                    : fs::path();
  if (mpath.empty()) return 0;
  Manifest m("report");
  m.config() = {{"corpus", a.corpus}, {"granularity", a.granularity}, {"json", a.output.json}};
  for (const auto& p : a.counts) m.input(p);
  if (!a.output.out.empty()) m.output(a.output.out);
  m.result() = report_json(rep, total);
  m.write(mpath);
  return 0;
}

int run_probe_set(const ProbeArgs& a, const ProbeSet& set, std::string_view command, Json config, std::ostream& out, std::ostream& err) {
  if (a.out.empty()) throw Error(ErrorKind::Config, "--out is required");
  const auto mode = mode_of(a.backend.mode);
  const auto scorer = make_scorer(a.backend);

  if (!a.probes_out.empty()) {
    auto w = create_writer(a.probes_out);
    write_probes(set, *w);
    w->close();
  }
  ScoreRunOptions opts;
  opts.workers = a.backend.workers;
  opts.batch_groups = a.backend.batch;
  opts.progress = [&err, &command](std::size_t done, std::size_t total) {
    err << command << ": " << done << "/" << total << " groups\n";
  };
  const auto r = score_to_file(*scorer, set, mode, a.out, opts);
  if (!r.ok()) return report_failures(r, set.group_count(), err);

  Json summary = {{"groups", set.group_count()},       {"pairs", set.pair_count()},
                  {"templates", set.template_count()}, {"instances", set.instance_count()},
                  {"scored", r.scored},                {"resumed", r.skipped},
                  {"backend", scorer->backend()},      {"mode", to_string(mode)}};
  Manifest m(command);
  const Json backend = backend_config(a.backend, *scorer);
  for (const auto& [k, v] : backend.items()) config[k] = v;
  m.config() = std::move(config);
  m.input(a.lex.path);
  if (a.templates != "default") m.input(a.templates);
  if (!a.backend.model.empty()) m.input(a.backend.model);
  m.output(a.out);
  if (!a.probes_out.empty()) m.output(a.probes_out);
  m.result() = summary;
  m.write(a.manifest.empty() ? sidecar(a.out) : fs::path(a.manifest));
  out << (a.json ? summary.dump(2) + "\n" : kv_lines(summary));
  return 0;
}

int cmd_probe(const ProbeArgs& a, std::ostream& out, std::ostream& err) {
  const auto lex = load_lex(a.lex);
  auto templates = load_tpl(a.templates, lex);
  auto pairs = sample_pairs(lex, a.pairs, a.seed);
  const auto set = build_probe_set(std::move(templates), std::move(pairs), conditions_of(a.condition),
                                   lex, a.seed);
  Json config = {{"lexicon", a.lex.path}, {"rule_filter", a.lex.rule_filter},
                 {"lexicon_pairs", lex.size()}, {"lexicon_sha256", lex.checksum()},
                 {"seed", a.seed}, {"pairs", a.pairs}, {"templates", a.templates},
                 {"condition", a.condition}};
  return run_probe_set(a, set, "probe", std::move(config), out, err);
}

int cmd_nonce_probe(const ProbeArgs& a, std::ostream& out, std::ostream& err) {
  if (a.export_nonce) {
    const std::string text = nonce_table_json();
    if (a.out.empty() || a.out == "-") {
      out << text << (text.ends_with('\n') ? "" : "\n");
    } else {
      write_file(a.out, text);
    }
    return 0;
  }
  if (a.lex.path.empty()) throw Error(ErrorKind::Config, "--lexicon is required");
  const auto lex = load_lex(a.lex);
  if (a.cues == 0 || a.cues > lex.size()) {
    throw Error(ErrorKind::Config, "--cues must be in 1.." + std::to_string(lex.size()));
  }
  ChaChaRng rng(a.seed);
  std::vector<VariantPair> cues;
  for (const auto i : sample_without_replacement(lex.size(), a.cues, rng)) cues.push_back(lex[i]);
  const auto& nonce = nonce_table();
  const auto set = build_nonce_set(load_tpl(a.templates, lex), cues, nonce, lex, a.seed);
  Json config = {{"lexicon", a.lex.path}, {"rule_filter", a.lex.rule_filter},
                 {"lexicon_pairs", lex.size()}, {"lexicon_sha256", lex.checksum()},
                 {"seed", a.seed}, {"cues", a.cues}, {"templates", a.templates},
                 {"condition", "adjacent"}};
  return run_probe_set(a, set, "nonce-probe", std::move(config), out, err);
}

int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
  const auto groups = read_scores(a.scores);
  MetricsMetadata meta;
  meta.scores_sha256 = sha256_file(a.scores);
  if (const auto side = sidecar(a.scores); fs::exists(side)) {
    try {
      const auto j = Json::parse(read_file(side));
      const auto& c = j.at("config");
      meta.backend = c.value("backend", "");
      meta.mode = c.value("mode", "");
      if (c.contains("seed") && c.at("seed").is_number_unsigned()) {
        meta.seed = c.at("seed").get<std::uint64_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::DataFormat, side.string() + ": " + e.what());
    }
  }
  const auto rep = compute_metrics(groups, a.by_template, meta);
  emit(a.output, a.output.json ? to_json(rep).dump(2) + "\n" : render_tsv(rep), out);

  const fs::path mpath = !a.output.manifest.empty() ? fs::path(a.output.manifest)
                         : !a.output.out.empty()    ? sidecar(a.output.out)
                                                    : fs::path();
  if (mpath.empty()) return 0;
  Manifest m("metrics");
  m.config() = {{"by_template", a.by_template}, {"json", a.output.json}};
  m.input(a.scores);
  if (!a.output.out.empty()) m.output(a.output.out);
  m.result() = to_json(rep);
  m.write(mpath);
  return 0;
}

int cmd_debias(const DebiasArgs& a, std::ostream& out, std::ostream& err) {
  if (a.corpus == "-") throw Error(ErrorKind::Config, "debias reads its corpus twice; stdin is not supported");
  if (a.validation % 2 != 0) {
    throw Error(ErrorKind::Config, "--validation must be even (got " + std::to_string(a.validation) + ")");
  }
  const auto lex = load_lex(a.lex);
  const auto g = granularity_of(a.granularity);
  if (!fs::exists(a.corpus)) throw Error(ErrorKind::Io, "no such file: " + a.corpus);

  SyntheticManifest built;
  {
    auto train = create_writer(a.train_out);
    auto validation = create_writer(a.validation_out);
    SyntheticOptions opts;
    opts.validation_size = a.validation;
    opts.seed = a.seed;
    opts.workers = a.workers;
    built = build_synthetic([&] { return open_records(a.corpus, g); }, lex, *train, *validation, opts);
    train->close();
    validation->close();
  }
  err << "debias: " << built.qualifying_sources << " of " << built.records_read
      << " records qualify\n";

  Json verification;
  bool ok = true;
  for (const auto& [name, path] : {std::pair{"train", a.train_out}, {"validation", a.validation_out}}) {
    auto in = open_records(path);
    const auto v = verify_consistency(*in, lex);
    if (v.empty()) err << "warning: " << name << " split is empty\n";
    if (!v.ok()) {
      ok = false;
      err << "error: " << name << " split is not consistent: " << v.counts.all().mismatched()
          << " mismatched pairs in " << v.offending_total << " records\n";
      for (const auto id : v.offending_records) err << "  record " << id << "\n";
      if (!v.balanced()) err << "  US-matched and UK-matched counts differ\n";
    }
    verification[name] = to_json(v);
  }

  Manifest m("debias");
  m.config() = {{"lexicon", a.lex.path},       {"rule_filter", a.lex.rule_filter},
                {"seed", a.seed},              {"validation", a.validation},
                {"granularity", a.granularity}, {"case_policy", kCasePolicy}};
  m.input(a.corpus);
  m.input(a.lex.path);
  m.output(a.train_out);
  m.output(a.validation_out);
  m.result() = {{"synthetic", to_json(built)}, {"verification", verification}};
  m.write(a.output.manifest.empty() ? sidecar(a.train_out) : fs::path(a.output.manifest));
  if (!ok) return static_cast<int>(ErrorKind::DataFormat);

  Json summary = {{"records_read", built.records_read},
                  {"qualifying_sources", built.qualifying_sources},
                  {"train_records", built.train_records},
                  {"validation_records", built.validation_records},
                  {"us_records", built.us_records},
                  {"uk_records", built.uk_records},
                  {"consistent", ok}};
  emit(a.output, a.output.json ? summary.dump(2) + "\n" : kv_lines(summary), out);
  return 0;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  if (a.order < 1) throw Error(ErrorKind::Config, "--order must be at least 1");
  if (!(a.k > 0.0)) throw Error(ErrorKind::Config, "--k must be positive");
  ConcatStream in(a.corpora, granularity_of(a.granularity));
  const auto model = train_ngram(in, {.order = a.order, .k = a.k});
  model.save(a.out);
  err << "train-ngram: " << model.sentences() << " sentences, vocabulary " << model.vocabulary_size()
      << "\n";

  Json summary = {{"backend", model.backend()},
                  {"sentences", model.sentences()},
                  {"vocabulary_size", model.vocabulary_size()}};
  Manifest m("train-ngram");
  m.config() = {{"order", a.order}, {"k", a.k}, {"granularity", a.granularity}};
  for (const auto& p : a.corpora) m.input(p);
  m.output(a.out);
  m.result() = summary;
  m.write(a.manifest.empty() ? sidecar(a.out) : fs::path(a.manifest));
  out << kv_lines(summary);
  return 0;
}

void add_output_options(CLI::App* app, Output& o) {
  app->add_option("--out", o.out, "report file (default: standard output)");
  app->add_flag("--json", o.json, "JSON instead of TSV");
  app->add_option("--manifest", o.manifest, "manifest path (default: <out>.manifest.json)");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spelling-convention consistency toolkit", "spellscope"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPELLSCOPE_VERSION);

  ScanArgs scan_a;
  auto* scan_c = app.add_subcommand("scan", "count variant-word pairs in corpora");
  scan_c->add_option("corpus", scan_a.corpora, "text files, plain or gzip; several are merged")
      ->required();
  add_lexicon_options(scan_c, scan_a.lex);
  scan_c->add_option("--granularity", scan_a.granularity, "line, paragraph or document")
      ->capture_default_str();
  scan_c->add_option("--counts-out", scan_a.counts_out, "write raw pair counts as JSON");
  scan_c->add_option("--workers", scan_a.workers)->capture_default_str();
  scan_c->add_option("--pair-cap", scan_a.pair_cap, "records with more pairs are flagged")
      ->capture_default_str();
  add_output_options(scan_c, scan_a.output);

  ReportArgs report_a;
  auto* report_c = app.add_subcommand("report", "render a corpus report from saved counts");
  report_c->add_option("counts", report_a.counts, "counts or scan JSON files; several are merged")
      ->required();
  report_c->add_option("--corpus", report_a.corpus, "corpus name in the header");
  report_c->add_option("--granularity", report_a.granularity)->capture_default_str();
  add_output_options(report_c, report_a.output);

  ProbeArgs probe_a;
  auto* probe_c = app.add_subcommand("probe", "build and score a probe set");
  add_lexicon_options(probe_c, probe_a.lex);
  probe_c->add_option("--seed", probe_a.seed, "pair sampling seed")->required();
  probe_c->add_option("--pairs", probe_a.pairs, "sampled cue/filler pairs")->capture_default_str();
  probe_c->add_option("--templates", probe_a.templates, "template file or 'default'")
      ->capture_default_str();
  probe_c->add_option("--condition", probe_a.condition, "adjacent, nonadjacent or both")
      ->capture_default_str();
  probe_c->add_option("--out", probe_a.out, "score file (JSON Lines)")->required();
  probe_c->add_option("--probes-out", probe_a.probes_out, "also export the probe instances");
  probe_c->add_option("--manifest", probe_a.manifest);
  probe_c->add_flag("--json", probe_a.json);
  add_backend_options(probe_c, probe_a.backend);

  ProbeArgs nonce_a;
  auto* nonce_c = app.add_subcommand("nonce-probe", "score real cue words against nonce fillers");
  nonce_c->add_option("--lexicon", nonce_a.lex.path, "American->British JSON dictionary");
  nonce_c->add_flag("--rule-filter", nonce_a.lex.rule_filter);
  auto* nonce_seed = nonce_c->add_option("--seed", nonce_a.seed, "cue sampling seed");
  nonce_c->add_option("--cues", nonce_a.cues, "sampled real cue pairs")->capture_default_str();
  nonce_c->add_option("--templates", nonce_a.templates)->capture_default_str();
  nonce_c->add_option("--out", nonce_a.out, "score file, or the table with --export-nonce");
  nonce_c->add_option("--probes-out", nonce_a.probes_out);
  nonce_c->add_option("--manifest", nonce_a.manifest);
  nonce_c->add_flag("--json", nonce_a.json);
  nonce_c->add_flag("--export-nonce", nonce_a.export_nonce, "print the nonce table as JSON and exit");
  add_backend_options(nonce_c, nonce_a.backend);

  MetricsArgs metrics_a;
  auto* metrics_c = app.add_subcommand("metrics", "conditional tables, accuracy and MI from scores");
  metrics_c->add_option("scores", metrics_a.scores, "score file from probe")->required();
  metrics_c->add_flag("--by-template", metrics_a.by_template,
                      "average per template first and report the std across templates");
  add_output_options(metrics_c, metrics_a.output);

  DebiasArgs debias_a;
  auto* debias_c = app.add_subcommand("debias", "write an all-US plus all-UK synthetic corpus");
  debias_c->add_option("corpus", debias_a.corpus)->required();
  add_lexicon_options(debias_c, debias_a.lex);
  debias_c->add_option("--seed", debias_a.seed, "validation split seed")->required();
  debias_c->add_option("--validation", debias_a.validation, "validation records, even")
      ->capture_default_str();
  debias_c->add_option("--train-out", debias_a.train_out)->required();
  debias_c->add_option("--validation-out", debias_a.validation_out)->required();
  debias_c->add_option("--granularity", debias_a.granularity)->capture_default_str();
  debias_c->add_option("--workers", debias_a.workers)->capture_default_str();
  add_output_options(debias_c, debias_a.output);

  TrainArgs train_a;
  auto* train_c = app.add_subcommand("train-ngram", "train an add-k n-gram scoring model");
  train_c->add_option("corpus", train_a.corpora, "one sentence per record")->required();
  train_c->add_option("--out", train_a.out, "model file")->required();
  train_c->add_option("--order", train_a.order)->capture_default_str();
  train_c->add_option("--k", train_a.k, "add-k smoothing constant")->capture_default_str();
  train_c->add_option("--granularity", train_a.granularity)->capture_default_str();
  train_c->add_option("--manifest", train_a.manifest);

  std::vector<const char*> argv{"spellscope"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << SPELLSCOPE_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Config);
  }

  if (*scan_c) return cmd_scan(scan_a, out, err);
  if (*report_c) return cmd_report(report_a, out);
  if (*probe_c) return cmd_probe(probe_a, out, err);
  if (*nonce_c) {
    if (!nonce_a.export_nonce && nonce_seed->count() == 0) {
      throw Error(ErrorKind::Config, "--seed is required");
    }
    return cmd_nonce_probe(nonce_a, out, err);
  }
  if (*metrics_c) return cmd_metrics(metrics_a, out);
  if (*debias_c) return cmd_debias(debias_a, out, err);
  if (*train_c) return cmd_train(train_a, out, err);
  return static_cast<int>(ErrorKind::Config);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace spellscope::cli
