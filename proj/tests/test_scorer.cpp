#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"
#include "spellscope/ngram.hpp"
#include "spellscope/remote.hpp"

using namespace spellscope;

namespace {

std::vector<std::string> repeat(const std::string& s, int n) { return std::vector<std::string>(n, s); }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("spellscope_scorer_" + name);
}

/// Serves the wire protocol from a local scorer, optionally failing.
class FakeShim {
 public:
  explicit FakeShim(const Scorer& model) : model_(model) {
    for (const char* ep : {"/score/span", "/score/joint_span", "/score/ar"}) {
      server_.Post(ep, [this](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        if (fail_next > 0) {
          --fail_next;
          res.status = fail_status;
          return;
        }
        try {
          const auto r = request_from_json(nlohmann::json::parse(req.body));
          if (endpoint_for(r.mode) != req.path) throw Error(ErrorKind::DataFormat, "wrong endpoint");
          last_body = req.body;
          res.set_content(response_to_json(r.request_id, model_.score(r)).dump(), "application/json");
        } catch (const std::exception& e) {
          res.status = 400;
          res.set_content(error_response("", e.what()).dump(), "application/json");
        }
      });
    }
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"model":"fake-ngram"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeShim() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> hits{0};
  std::atomic<int> fail_next{0};
  int fail_status = 503;
  std::string last_body;

 private:
  const Scorer& model_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// A port that was free a moment ago and has nothing listening on it.
std::string dead_url() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return "http://127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
}

RemoteOptions fast(std::string url) {
  RemoteOptions o;
  o.url = std::move(url);
  o.timeout = std::chrono::milliseconds(2000);
  o.backoff = std::chrono::milliseconds(1);
  return o;
}

const std::vector<std::string> kFixture{
    "my preferred words are flavour harbour and tree",
    "flavour harbour",
    "flavour colour",
    "the harbour",
    "sky desk",
};

ProbeSet small_set(std::size_t pairs, std::vector<Condition> conditions, std::size_t templates = 1) {
  static const auto lex = fixture::mini_lexicon();
  std::vector<PromptTemplate> t(default_templates().begin(),
                                default_templates().begin() + static_cast<std::ptrdiff_t>(templates));
  return build_probe_set(t, sample_pairs(lex, pairs, 4), std::move(conditions), lex, 4);
}

NGramModel consistent_model() {
  std::vector<std::string> corpus;
  const auto lex = fixture::mini_lexicon();
  for (std::size_t i = 0; i < lex.size(); ++i) {
    for (std::size_t j = 0; j < lex.size(); ++j) {
      corpus.push_back("my preferred words are " + lex[i].us + " and " + lex[j].us);
      corpus.push_back("my preferred words are " + lex[i].uk + " and " + lex[j].uk);
    }
  }
  return train_ngram(corpus);
}

}  // namespace

TEST_CASE("add-k estimate from hand counts") {
  NGramModel m(2, 0.1, {"a", "b", "x"}, true);
  const std::vector<std::string> a{"a"};
  m.add_count(a, "b", 3);
  m.add_count(a, "x", 1);
  CHECK(m.vocabulary_size() == 3);
  CHECK(m.probability(a, "b") == doctest::Approx(3.1 / 4.3).epsilon(1e-15));
  CHECK(m.log_prob(a, "b") == doctest::Approx(std::log(3.1 / 4.3)).epsilon(1e-15));
  CHECK(m.probability(a, "x") == doctest::Approx(1.1 / 4.3).epsilon(1e-15));
  CHECK(m.probability(a, "a") == doctest::Approx(0.1 / 4.3).epsilon(1e-15));
}

TEST_CASE("trained bigram adds </s> and <unk> to the vocabulary") {
  auto corpus = repeat("a b", 3);
  corpus.push_back("a x");
  const auto m = train_ngram(corpus, {.order = 2, .k = 0.1});
  CHECK(m.vocabulary_size() == 5);
  const std::vector<std::string> a{"a"};
  CHECK(m.probability(a, "b") == doctest::Approx(3.1 / 4.5).epsilon(1e-15));
  CHECK(m.probability(a, "never_seen") == doctest::Approx(0.1 / 4.5).epsilon(1e-15));

  const auto cc = train_ngram(repeat("colour harbour", 100), {.order = 2, .k = 0.1});
  const std::vector<std::string> colour{"colour"};
  CHECK(cc.probability(colour, "harbour") == doctest::Approx(100.1 / 100.4).epsilon(1e-15));
  CHECK(cc.probability(colour, "harbour") > 0.9);
}

TEST_CASE("conditional distributions sum to one") {
  const auto m = train_ngram(kFixture);
  const std::vector<std::vector<std::string>> histories{
      {}, {"flavour"}, {"flavour", "harbour"}, {"are", "flavour"}, {"unseen", "words"}};
  for (const auto& h : histories) {
    double total = 0.0;
    for (const auto& w : m.vocabulary()) total += m.probability(h, w);
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("empty corpus and bad parameters") {
  CHECK_THROWS_AS(train_ngram(std::vector<std::string>{}), Error);
  CHECK_THROWS_AS(train_ngram(std::vector<std::string>{"", "123 ..."}), Error);
  CHECK_THROWS_AS(NGramModel(1, 0.1, {}), Error);
  CHECK_THROWS_AS(NGramModel(3, 0.0, {}), Error);
}

TEST_CASE("span_fill_score") {
  const auto m = train_ngram(repeat("a b c", 20));
  CHECK(m.span_fill_score("a <blank> c", "b") > m.span_fill_score("a <blank> c", "x"));

  const NGramModel uniform(3, 0.1, {});
  CHECK(uniform.span_fill_score("a <blank> c", "b") == uniform.span_fill_score("a <blank> c", "x"));

  CHECK_THROWS_AS(m.span_fill_score("a c", "b"), Error);
  CHECK_THROWS_AS(m.span_fill_score("a <blank> <blank> c", "b"), Error);
  CHECK_THROWS_AS(m.span_fill_score("a <blank> c", "!!"), Error);
  try {
    m.span_fill_score("a <blank> c", "");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DataFormat);
  }
}

TEST_CASE("joint_span_score") {
  const auto m = train_ngram(kFixture);
  const std::string ctx = "my preferred words are <blank> <blank> and tree";
  CHECK(m.joint_span_score(ctx, "flavour", "harbour") >= m.joint_span_score(ctx, "flavour", "labour"));
  CHECK(m.joint_span_score(ctx, "flavour", "harbour") >= m.joint_span_score(ctx, "flavor", "harbour"));
  CHECK_THROWS_AS(m.joint_span_score("one <blank> only", "a", "b"), Error);
}

TEST_CASE("joint score with the second blank filled equals the span score") {
  const auto m = train_ngram(kFixture);
  std::mt19937_64 rng(17);
  const std::vector<std::string> words{"my", "flavour", "harbour", "tree", "sky", "labour", "and", "are"};
  auto pick = [&] { return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)]; };
  for (int i = 0; i < 20; ++i) {
    const std::string a = pick(), b = pick(), c = pick(), c1 = pick(), c2 = pick();
    const std::string two = a + " <blank> " + b + ", <blank> " + c + ".";
    const std::string one = a + " <blank> " + b + ", " + c2 + " " + c + ".";
    CHECK(m.joint_span_score(two, c1, c2) == m.span_fill_score(one, c1));
  }
}

TEST_CASE("ar_score on a bigram chain") {
  const auto m = train_ngram(kFixture, {.order = 2, .k = 0.1});
  REQUIRE(m.vocabulary_size() == 14);
  const std::string prefix = "My preferred words are flavour,";
  const double target = m.ar_score(prefix, "harbour", ScoreMode::ArTargetOnly);
  CHECK(target == doctest::Approx(std::log(2.1 / 4.4)).epsilon(1e-14));
  const double eos = m.ar_score(prefix, "harbour", ScoreMode::ArToEos, ", and tree.");
  const double expect = std::log(2.1 / 4.4) + std::log(1.1 / 4.4) + std::log(1.1 / 2.4) +
                        std::log(1.1 / 2.4);
  CHECK(eos == doctest::Approx(expect).epsilon(1e-14));
  CHECK(target >= eos);

  CHECK_THROWS_AS(m.ar_score(prefix, "harbour", ScoreMode::ArToEos), Error);
  CHECK_THROWS_AS(m.ar_score(prefix, "harbour", ScoreMode::ArTargetOnly, "x"), Error);
  CHECK_THROWS_AS(m.ar_score("", "harbour", ScoreMode::ArTargetOnly), Error);
  CHECK_THROWS_AS(m.ar_score(prefix, "harbour", ScoreMode::SpanFillOne), Error);
}

TEST_CASE("target-only never scores below to-EOS") {
  const auto m = train_ngram(kFixture);
  for (const auto* t : {"harbour", "labour", "tree"}) {
    for (const auto* suffix : {"", ".", ", and tree.", " harbour harbour"}) {
      CHECK(m.ar_score("flavour", t, ScoreMode::ArTargetOnly) >=
            m.ar_score("flavour", t, ScoreMode::ArToEos, suffix));
    }
  }
}

TEST_CASE("model persistence is byte-stable") {
  const auto a = train_ngram(kFixture);
  const auto b = train_ngram(kFixture);
  CHECK(a.serialize() == b.serialize());
  const auto path = temp_path("model.txt");
  a.save(path);
  const auto c = NGramModel::load(path);
  CHECK(c.serialize() == a.serialize());
  CHECK(c.span_fill_score("flavour <blank> and tree", "harbour") ==
        a.span_fill_score("flavour <blank> and tree", "harbour"));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(NGramModel::deserialize("not a model"), Error);

  NGramModel closed(2, 0.5, {"a", "b"}, true);
  closed.add_count(std::vector<std::string>{"a"}, "b", 2);
  const auto back = NGramModel::deserialize(closed.serialize());
  CHECK(back.closed());
  CHECK(back.probability(std::vector<std::string>{"a"}, "b") ==
        closed.probability(std::vector<std::string>{"a"}, "b"));
}

TEST_CASE("group requests per mode") {
  const VariantPair flavor{"flavor", "flavour", SpellingRule::OR_OUR};
  const VariantPair harbor{"harbor", "harbour", SpellingRule::OR_OUR};
  const auto lex = fixture::mini_lexicon();
  const ProbeSet set({default_templates()[1]}, {PairCombo{flavor, harbor, 0, 1, false}},
                     {Condition::Adjacent}, 0, "lexical");

  const auto span = group_requests(set, 0, ScoreMode::SpanFillOne);
  REQUIRE(span.size() == 2);
  CHECK(span[0].context == "My preferred words are flavor, <blank>, and tree.");
  CHECK(span[1].context == "My preferred words are flavour, <blank>, and tree.");
  CHECK(span[1].candidates == std::vector<std::string>{"harbor", "harbour"});

  const auto joint = group_requests(set, 0, ScoreMode::SpanFillTwo);
  REQUIRE(joint.size() == 4);
  CHECK(joint[0].context == "My preferred words are <blank>, <blank>, and tree.");
  CHECK(joint[1].candidates == std::vector<std::string>{"flavor", "harbour"});
  CHECK(joint[2].candidates == std::vector<std::string>{"flavour", "harbor"});

  const auto target = group_requests(set, 0, ScoreMode::ArTargetOnly);
  CHECK(target[1].prefix == "My preferred words are flavour,");
  CHECK_FALSE(target[1].suffix);
  const auto eos = group_requests(set, 0, ScoreMode::ArToEos);
  CHECK(eos[1].suffix == std::optional<std::string>(", and tree."));
  CHECK(eos[0].request_id == "g0.0");
  CHECK(eos[1].request_id == "g0.1");
}

TEST_CASE("four-way scores follow the spelling order") {
  const auto m = consistent_model();
  const auto set = small_set(2, {Condition::Adjacent});
  const auto scores = score_all(m, set, ScoreMode::SpanFillOne, {.workers = 1});
  REQUIRE(scores.size() == 2);
  for (const auto& s : scores) {
    const auto inst = set.group_instances(s.group);
    for (std::size_t i = 0; i < 4; ++i) {
      std::string ctx = inst[i].rendered_text;
      ctx.replace(inst[i].filler_offset, inst[i].filler_word.size(), kBlank);
      CHECK(s.log_score[i] == m.span_fill_score(ctx, inst[i].filler_word));
    }
    CHECK(s.at(Side::US, Side::US) > s.at(Side::US, Side::UK));
    CHECK(s.at(Side::UK, Side::UK) > s.at(Side::UK, Side::US));
  }
}

TEST_CASE("score JSON round-trip and malformed input") {
  FourWayScores s;
  s.group = 7;
  s.template_id = 3;
  s.condition = Condition::NonAdjacent;
  s.cue = {"color", "colour", SpellingRule::OR_OUR};
  s.filler = {"center", "centre", SpellingRule::ER_RE};
  s.log_score = {-1.5, -std::numeric_limits<double>::infinity(), -0.25, -3.0};
  const auto line = to_json(s).dump();
  CHECK(line.find("null") != std::string::npos);
  const auto back = scores_from_json(nlohmann::json::parse(line));
  CHECK(back.group == 7);
  CHECK(back.condition == Condition::NonAdjacent);
  CHECK(back.filler.rule == SpellingRule::ER_RE);
  CHECK(std::isinf(back.log_score[1]));
  CHECK_FALSE(back.finite());
  CHECK(to_json(back).dump() == line);

  CHECK_THROWS_AS(parse_scores(""), Error);
  try {
    parse_scores(line + "\n{\"group\": 1}\n");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DataFormat);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("score_probe_set output is independent of workers and batching") {
  const auto m = consistent_model();
  const auto set = small_set(6, {Condition::Adjacent, Condition::NonAdjacent}, 3);
  const auto serial = score_all(m, set, ScoreMode::ArToEos, {.workers = 1});
  const auto parallel = score_all(m, set, ScoreMode::ArToEos, {.workers = 8, .batch_groups = 5});
  REQUIRE(serial.size() == set.group_count());
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].group == i);
    CHECK(to_json(serial[i]).dump() == to_json(parallel[i]).dump());
  }
}

TEST_CASE("interrupted scoring resumes to an identical file") {
  const auto m = consistent_model();
  const auto set = small_set(5, {Condition::Adjacent, Condition::NonAdjacent}, 2);
  const auto full = temp_path("full.jsonl");
  const auto resumed = temp_path("resumed.jsonl");
  for (const auto& p : {full, resumed, checkpoint_path(full), checkpoint_path(resumed)}) {
    std::filesystem::remove(p);
  }

  REQUIRE(score_to_file(m, set, ScoreMode::SpanFillOne, full, {.workers = 3}).ok());
  CHECK_FALSE(std::filesystem::exists(checkpoint_path(full)));

  const auto half = score_to_file(m, set, ScoreMode::SpanFillOne, resumed,
                                  {.workers = 3, .batch_groups = 4, .limit = set.group_count() / 2});
  CHECK(half.interrupted);
  CHECK(half.scored == set.group_count() / 2);
  CHECK_FALSE(std::filesystem::exists(resumed));
  {
    // a torn trailing line, as left by a killed writer
    std::ofstream torn(checkpoint_path(resumed), std::ios::app);
    torn << "{\"group\": 9, \"templ";
  }
  const auto rest = score_to_file(m, set, ScoreMode::SpanFillOne, resumed, {.workers = 2});
  CHECK(rest.ok());
  CHECK(rest.skipped == set.group_count() / 2);
  CHECK(read_file(resumed) == read_file(full));
  CHECK(read_scores(full).size() == set.group_count());

  std::filesystem::remove(full);
  std::filesystem::remove(resumed);
}

TEST_CASE("checkpoint from another probe set is rejected") {
  const auto m = consistent_model();
  const auto out = temp_path("mismatch.jsonl");
  std::filesystem::remove(out);
  score_to_file(m, small_set(4, {Condition::Adjacent}), ScoreMode::SpanFillOne, out, {.limit = 2});
  const auto other = build_probe_set({default_templates()[5]}, sample_pairs(fixture::mini_lexicon(), 4, 99),
                                     {Condition::Adjacent}, fixture::mini_lexicon());
  CHECK_THROWS_AS(score_to_file(m, other, ScoreMode::SpanFillOne, out), Error);
  std::filesystem::remove(checkpoint_path(out));
}

TEST_CASE("wire protocol encoding") {
  ScoreRequest r;
  r.mode = ScoreMode::ArToEos;
  r.prefix = "My preferred words are flavour,";
  r.suffix = ", and tree.";
  r.candidates = {"harbor", "harbour"};
  r.request_id = "g3.1";
  const auto j = request_to_json(r);
  CHECK(j.dump() ==
        R"({"mode":"AR_TO_EOS","prefix":"My preferred words are flavour,","suffix":", and tree.",)"
        R"("candidates":["harbor","harbour"],"request_id":"g3.1"})");
  const auto back = request_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.prefix == r.prefix);
  CHECK(back.suffix == r.suffix);
  CHECK(back.candidates == r.candidates);
  CHECK(endpoint_for(ScoreMode::SpanFillOne) == "/score/span");
  CHECK(endpoint_for(ScoreMode::SpanFillTwo) == "/score/joint_span");
  CHECK(endpoint_for(ScoreMode::ArTargetOnly) == "/score/ar");

  ScoreRequest span;
  span.mode = ScoreMode::SpanFillOne;
  span.context = "My preferred words are flavour, <blank>, and tree.";
  span.candidates = {"harbour"};
  span.request_id = "x";
  CHECK(request_to_json(span).dump() ==
        R"({"mode":"SPAN_FILL_ONE","context":"My preferred words are flavour, <blank>, and tree.",)"
        R"("candidates":["harbour"],"request_id":"x"})");

  CHECK_THROWS_AS(request_from_json(nlohmann::json::parse(R"({"mode":"SPAN_FILL_TWO","context":"<blank>",)"
                                                          R"("candidates":["a","b"],"request_id":"y"})")),
                  Error);
  CHECK_THROWS_AS(request_from_json(nlohmann::json::parse(R"({"mode":"BEAM"})")), Error);

  const auto scores = parse_response(R"({"request_id":"g3.1","log_scores":[-1.25,null]})", r);
  CHECK(scores[0] == -1.25);
  CHECK(std::isinf(scores[1]));
  CHECK(response_to_json("g3.1", scores).dump() == R"({"request_id":"g3.1","log_scores":[-1.25,null]})");

  const auto backend_error = [&](std::string_view body) {
    try {
      parse_response(body, r);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::Backend && std::string(e.what()).find("g3.1") != std::string::npos;
    }
    return false;
  };
  CHECK(backend_error(R"({"request_id":"other","log_scores":[-1,-2]})"));
  CHECK(backend_error(R"({"request_id":"g3.1","log_scores":[-1]})"));
  CHECK(backend_error(R"({"request_id":"g3.1","error":"CUDA out of memory"})"));
  CHECK(backend_error(R"({"request_id":"g3.1","log_scores":["high","low"]})"));
  CHECK(backend_error("<html>"));
}

TEST_CASE("remote backend matches the local model it fronts") {
  const auto m = consistent_model();
  FakeShim shim(m);
  const RemoteScorer remote(fast(shim.url()));
  CHECK(remote.health() == "fake-ngram");
  CHECK(remote.backend() == "remote(" + shim.url() + ")");

  const auto set = small_set(3, {Condition::Adjacent, Condition::NonAdjacent});
  for (const auto mode : {ScoreMode::SpanFillOne, ScoreMode::SpanFillTwo, ScoreMode::ArTargetOnly,
                          ScoreMode::ArToEos}) {
    const auto local = score_all(m, set, mode, {.workers = 1});
    const auto far = score_all(remote, set, mode, {.workers = 4});
    REQUIRE(far.size() == local.size());
    for (std::size_t i = 0; i < local.size(); ++i) CHECK(to_json(far[i]).dump() == to_json(local[i]).dump());
  }
}

TEST_CASE("remote retries transient failures with a bounded budget") {
  const auto m = consistent_model();
  FakeShim shim(m);
  const RemoteScorer remote(fast(shim.url()));

  shim.fail_next = 3;
  CHECK(std::isfinite(remote.span_fill_score("color <blank>", "labor")));
  CHECK(shim.hits == 4);

  shim.hits = 0;
  shim.fail_next = 10;
  CHECK_THROWS_AS(remote.span_fill_score("color <blank>", "labor"), Error);
  CHECK(shim.hits == 4);  // first try plus three retries

  shim.hits = 0;
  shim.fail_next = 1;
  shim.fail_status = 400;
  try {
    remote.span_fill_score("color <blank>", "labor");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Backend);
  }
  CHECK(shim.hits == 1);
}

TEST_CASE("backend down: every group fails and no output is written") {
  const RemoteScorer remote(fast(dead_url()));
  CHECK_THROWS_AS(remote.health(), Error);
  const auto set = small_set(3, {Condition::Adjacent}, 2);
  const auto out = temp_path("down.jsonl");
  std::filesystem::remove(out);
  const auto report = score_to_file(remote, set, ScoreMode::SpanFillOne, out, {.workers = 2});
  CHECK_FALSE(report.ok());
  CHECK(report.scored == 0);
  REQUIRE(report.failures.size() == set.group_count());
  for (std::size_t i = 0; i < report.failures.size(); ++i) CHECK(report.failures[i].group == i);
  CHECK_FALSE(std::filesystem::exists(out));
  CHECK(read_file(checkpoint_path(out)).empty());
  std::filesystem::remove(checkpoint_path(out));

  CHECK_THROWS_AS(RemoteScorer(fast("")), Error);
  CHECK_THROWS_AS(RemoteScorer(fast("ftp://host")), Error);
}
