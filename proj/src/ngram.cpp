#include "spellscope/ngram.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "spellscope/text.hpp"

namespace spellscope {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> candidate_tokens(std::string_view candidate) {
  auto t = tokenize_words(candidate);
  if (t.empty()) {
    throw Error(ErrorKind::DataFormat,
                "candidate '" + std::string(candidate) + "' has no word tokens");
  }
  return t;
}

void append(std::vector<std::string>& out, std::vector<std::string> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

}  // namespace

NGramModel::NGramModel(unsigned order, double k, std::vector<std::string> vocabulary, bool closed)
    : order_(order), k_(k), closed_(closed) {
  if (order < 2) throw Error(ErrorKind::Config, "n-gram order must be at least 2");
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw Error(ErrorKind::Config, "smoothing constant k must be positive");
  }
  ids_.emplace(std::string(kBos), 0);
  for (const auto& w : vocabulary) intern(w);
  if (closed) {
    // Unknown words get the unseen mass but no slot of their own.
    const auto it = ids_.find(std::string(kUnk));
    unk_ = it == ids_.end() ? std::numeric_limits<std::uint32_t>::max() : it->second;
    return;
  }
  intern(kEos);
  unk_ = intern(kUnk);
}

std::uint32_t NGramModel::intern(std::string_view w) {
  const auto [it, inserted] = ids_.try_emplace(std::string(w), 0);
  if (inserted) {
    words_.emplace_back(w);
    it->second = static_cast<std::uint32_t>(words_.size());
  }
  return it->second;
}

std::uint32_t NGramModel::id_of(std::string_view w) const {
  const auto it = ids_.find(std::string(w));
  if (it == ids_.end() || it->second == 0) return unk_;
  return it->second;
}

NGramModel::Key NGramModel::history_key(std::span<const std::string> history) const {
  Key key(order_ - 1, U'\0');
  const std::size_t n = std::min<std::size_t>(history.size(), order_ - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = history[history.size() - n + i];
    key[order_ - 1 - n + i] = w == kBos ? U'\0' : static_cast<char32_t>(id_of(w));
  }
  return key;
}

void NGramModel::add_sentence(std::span<const std::string> words) {
  if (closed_) throw Error(ErrorKind::Config, "cannot train a closed-vocabulary model");
  Key window(order_ - 1, U'\0');
  auto bump = [&](std::uint32_t id) {
    ++counts_.contexts[window];
    Key gram = window;
    gram.push_back(static_cast<char32_t>(id));
    ++counts_.ngrams[gram];
    window.erase(0, 1);
    window.push_back(static_cast<char32_t>(id));
  };
  for (const auto& w : words) bump(intern(w));
  bump(id_of(kEos));
  ++sentences_;
}

void NGramModel::add_count(std::span<const std::string> history, std::string_view word,
                           std::uint64_t count) {
  if (history.size() != order_ - 1) {
    throw Error(ErrorKind::Config, "history must hold order-1 tokens");
  }
  Key key;
  for (const auto& h : history) key.push_back(h == kBos ? U'\0' : static_cast<char32_t>(intern(h)));
  counts_.contexts[key] += count;
  key.push_back(static_cast<char32_t>(intern(word)));
  counts_.ngrams[key] += count;
}

double NGramModel::probability(std::span<const std::string> history, std::string_view word) const {
  Key key = history_key(history);
  const auto c = counts_.contexts.find(key);
  const double denom =
      (c == counts_.contexts.end() ? 0.0 : static_cast<double>(c->second)) +
      k_ * static_cast<double>(words_.size());
  key.push_back(static_cast<char32_t>(id_of(word)));
  const auto g = counts_.ngrams.find(key);
  const double num = (g == counts_.ngrams.end() ? 0.0 : static_cast<double>(g->second)) + k_;
  return num / denom;
}

double NGramModel::log_prob(std::span<const std::string> history, std::string_view word) const {
  return std::log(probability(history, word));
}

double NGramModel::log_prob_sequence(std::span<const std::string> history,
                                     std::span<const std::string> continuation,
                                     bool to_eos) const {
  std::vector<std::string> ctx;
  const std::size_t keep = std::min<std::size_t>(history.size(), order_ - 1);
  ctx.assign(history.end() - static_cast<std::ptrdiff_t>(keep), history.end());
  double total = 0.0;
  auto step = [&](const std::string& w) {
    total += log_prob(ctx, w);
    ctx.push_back(w);
    if (ctx.size() > order_ - 1) ctx.erase(ctx.begin());
  };
  for (const auto& w : continuation) step(w);
  if (to_eos) step(std::string(kEos));
  return total;
}

double NGramModel::sentence_log_prob(std::span<const std::string> words) const {
  return log_prob_sequence({}, words, true);
}

std::string NGramModel::backend() const {
  return "ngram(order=" + std::to_string(order_) + ",k=" + shortest(k_) + ")";
}

std::vector<double> NGramModel::score(const ScoreRequest& r) const {
  validate(r);
  std::vector<double> out;
  switch (r.mode) {
    case ScoreMode::SpanFillOne: {
      const auto blank = r.context.find(kBlank);
      const auto before = tokenize_words(std::string_view(r.context).substr(0, blank));
      const auto after = tokenize_words(std::string_view(r.context).substr(blank + kBlank.size()));
      for (const auto& c : r.candidates) {
        auto words = before;
        append(words, candidate_tokens(c));
        words.insert(words.end(), after.begin(), after.end());
        out.push_back(sentence_log_prob(words));
      }
      break;
    }
    case ScoreMode::SpanFillTwo: {
      const std::string_view ctx = r.context;
      const auto b1 = ctx.find(kBlank);
      const auto b2 = ctx.find(kBlank, b1 + kBlank.size());
      auto words = tokenize_words(ctx.substr(0, b1));
      append(words, candidate_tokens(r.candidates[0]));
      append(words, tokenize_words(ctx.substr(b1 + kBlank.size(), b2 - b1 - kBlank.size())));
      append(words, candidate_tokens(r.candidates[1]));
      append(words, tokenize_words(ctx.substr(b2 + kBlank.size())));
      out.push_back(sentence_log_prob(words));
      break;
    }
    case ScoreMode::ArTargetOnly:
    case ScoreMode::ArToEos: {
      const auto history = tokenize_words(r.prefix);
      const bool eos = r.mode == ScoreMode::ArToEos;
      const auto tail = eos ? tokenize_words(*r.suffix) : std::vector<std::string>{};
      for (const auto& c : r.candidates) {
        auto cont = candidate_tokens(c);
        cont.insert(cont.end(), tail.begin(), tail.end());
        out.push_back(log_prob_sequence(history, cont, eos));
      }
      break;
    }
  }
  return out;
}

std::string NGramModel::serialize() const {
  std::vector<std::pair<const Key*, std::uint64_t>> grams;
  grams.reserve(counts_.ngrams.size());
  for (const auto& [key, c] : counts_.ngrams) grams.emplace_back(&key, c);
  std::sort(grams.begin(), grams.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });

  std::ostringstream out;
  out << "spellscope-ngram 1\n"
      << "order " << order_ << "\n"
      << "k " << shortest(k_) << "\n"
      << "sentences " << sentences_ << "\n"
      << "closed " << (closed_ ? 1 : 0) << "\n"
      << "vocab " << words_.size() << "\n";
  for (const auto& w : words_) out << w << "\n";
  out << "ngrams " << grams.size() << "\n";
  for (const auto& [key, c] : grams) {
    for (const char32_t id : *key) out << static_cast<std::uint32_t>(id) << ' ';
    out << c << "\n";
  }
  return out.str();
}

void NGramModel::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

NGramModel NGramModel::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [](const std::string& what) -> NGramModel {
    throw Error(ErrorKind::DataFormat, "n-gram model file: " + what);
  };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "spellscope-ngram" || version != 1) return fail("bad header");
  unsigned order = 0;
  std::string kstr;
  std::uint64_t sentences = 0;
  std::size_t vocab = 0;
  std::string field;
  if (!(in >> field >> order) || field != "order") return fail("missing order");
  if (!(in >> field >> kstr) || field != "k") return fail("missing k");
  if (!(in >> field >> sentences) || field != "sentences") return fail("missing sentence count");
  int closed = 0;
  if (!(in >> field >> closed) || field != "closed") return fail("missing closed flag");
  if (!(in >> field >> vocab) || field != "vocab") return fail("missing vocabulary");
  double k = 0.0;
  if (std::from_chars(kstr.data(), kstr.data() + kstr.size(), k).ec != std::errc{}) {
    return fail("bad k");
  }
  std::vector<std::string> words(vocab);
  for (auto& w : words) {
    if (!(in >> w)) return fail("truncated vocabulary");
  }
  NGramModel m(order, k, words, closed != 0);
  if (m.words_ != words) return fail("vocabulary must list </s> and <unk>");
  m.sentences_ = sentences;
  std::size_t n = 0;
  if (!(in >> field >> n) || field != "ngrams") return fail("missing n-gram table");
  for (std::size_t i = 0; i < n; ++i) {
    Key key(order, U'\0');
    for (auto& id : key) {
      std::uint32_t v = 0;
      if (!(in >> v) || v > vocab) return fail("bad n-gram entry " + std::to_string(i + 1));
      id = static_cast<char32_t>(v);
    }
    std::uint64_t c = 0;
    if (!(in >> c)) return fail("bad n-gram count " + std::to_string(i + 1));
    m.counts_.ngrams[key] += c;
    m.counts_.contexts[key.substr(0, order - 1)] += c;
  }
  return m;
}

NGramModel NGramModel::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

NGramModel train_ngram(RecordStream& corpus, const NGramOptions& opts) {
  NGramModel m(opts.order, opts.k, {});
  std::string rec;
  while (corpus.next(rec)) {
    const auto words = tokenize_words(rec);
    if (!words.empty()) m.add_sentence(words);
  }
  if (m.sentences() == 0) throw Error(ErrorKind::DataFormat, "training corpus has no tokens");
  return m;
}

NGramModel train_ngram(std::span<const std::string> corpus, const NGramOptions& opts) {
  VectorRecordStream s({corpus.begin(), corpus.end()});
  return train_ngram(s, opts);
}

}  // namespace spellscope
