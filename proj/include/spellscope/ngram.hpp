#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spellscope/record_io.hpp"
#include "spellscope/scorer.hpp"

namespace spellscope {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

/// Add-k smoothed n-gram model over normalized tokens.
///
///   P(w | h) = (c(h, w) + k) / (c(h) + k |V|)
///
/// h is the previous order-1 tokens, left-padded with <s>. V holds every
/// training word plus </s> and <unk>; <s> is never predicted. Out-of-vocabulary
/// words are scored as <unk>.
class NGramModel final : public Scorer {
 public:
  using Key = std::u32string;

  struct Counts {
    std::unordered_map<Key, std::uint64_t> ngrams;    // history + word
    std::unordered_map<Key, std::uint64_t> contexts;  // history only
  };

  NGramModel() = default;
  /// `vocabulary` lists predictable words; </s> and <unk> are appended when
  /// missing unless `closed`, in which case the list is used as is.
  /// Throws Error(Config) on order < 2 or k <= 0.
  NGramModel(unsigned order, double k, std::vector<std::string> vocabulary, bool closed = false);

  /// Adds one sentence of already-normalized tokens.
  void add_sentence(std::span<const std::string> words);
  /// Adds `count` observations of `word` after `history` (exactly order-1
  /// entries, "<s>" allowed). For hand-built fixtures.
  void add_count(std::span<const std::string> history, std::string_view word, std::uint64_t count);

  unsigned order() const { return order_; }
  double k() const { return k_; }
  std::size_t vocabulary_size() const { return words_.size(); }
  const std::vector<std::string>& vocabulary() const { return words_; }
  std::uint64_t sentences() const { return sentences_; }
  bool closed() const { return closed_; }

  double probability(std::span<const std::string> history, std::string_view word) const;
  double log_prob(std::span<const std::string> history, std::string_view word) const;

  /// Sum of log P over `continuation` given `history` (tokens, already
  /// normalized). Appends </s> when `to_eos`.
  double log_prob_sequence(std::span<const std::string> history,
                           std::span<const std::string> continuation, bool to_eos) const;
  /// Whole-sentence log probability including </s>.
  double sentence_log_prob(std::span<const std::string> words) const;

  std::string backend() const override;
  std::vector<double> score(const ScoreRequest& r) const override;

  /// Plain-text format, byte-stable for equal models.
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static NGramModel load(const std::filesystem::path& path);
  static NGramModel deserialize(std::string_view text);

 private:
  std::uint32_t id_of(std::string_view w) const;
  std::uint32_t intern(std::string_view w);
  Key history_key(std::span<const std::string> history) const;

  unsigned order_ = 3;
  double k_ = 0.1;
  std::vector<std::string> words_;  // id -> word; <s> is id 0 and not in words_
  std::unordered_map<std::string, std::uint32_t> ids_;
  Counts counts_;
  std::uint64_t sentences_ = 0;
  std::uint32_t unk_ = 0;
  bool closed_ = false;
};

struct NGramOptions {
  unsigned order = 3;
  double k = 0.1;
};

/// One sentence per record. Throws Error(DataFormat) when no record has a
/// token.
NGramModel train_ngram(RecordStream& corpus, const NGramOptions& opts = {});
NGramModel train_ngram(std::span<const std::string> corpus, const NGramOptions& opts = {});

}  // namespace spellscope
