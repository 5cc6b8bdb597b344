#pragma once

#include <stdlib.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "spellscope/common.hpp"
#include "spellscope/lexicon.hpp"

namespace spellscope::fixture {

/// n made-up -or/-our pairs ("zqaaaor"/"zqaaaour", ...). Stems share one
/// length so no US form can equal another pair's UK form.
inline VariantLexicon synthetic_lexicon(std::size_t n) {
  std::vector<VariantPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string stem = "zq";
    std::size_t x = i;
    for (int d = 0; d < 4; ++d) {
      stem.push_back(static_cast<char>('a' + x % 26));
      x /= 26;
    }
    pairs.push_back({stem + "or", stem + "our", SpellingRule::OR_OUR});
  }
  return VariantLexicon(std::move(pairs));
}

inline VariantLexicon mini_lexicon() {
  return load_lexicon(std::string(SPELLSCOPE_TEST_DATA) + "/mini_lexicon.json");
}

/// Short list-like sentences with 2-3 variant words whose sides are drawn
/// independently, so the raw text mixes conventions freely.
inline std::vector<std::string> list_sentences(const VariantLexicon& lex, std::size_t n,
                                               std::uint64_t seed) {
  static const std::vector<std::string> kLead{"They listed", "Our list had", "He mentioned",
                                              "You said", "The notes mention", "Someone typed",
                                              "Kids learn", "It was"};
  static const std::vector<std::string> kTail{"today", "twice", "in class", "at home", "again"};
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t bound) { return static_cast<std::size_t>(rng() % bound); };
  auto word = [&] {
    const auto& p = lex[pick(lex.size())];
    return pick(2) == 0 ? p.us : p.uk;
  };
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string lead = kLead[pick(kLead.size())];
    const std::string a = word(), b = word();
    switch (pick(4)) {
      case 0: out.push_back(lead + " " + a + " and " + b + "."); break;
      case 1: out.push_back(lead + " " + a + ", " + b + ", and " + word() + "."); break;
      case 2: out.push_back(lead + " " + a + ", " + b + " and " + word() + " " + kTail[pick(kTail.size())] + "."); break;
      default: out.push_back(a + " and " + b + " " + kTail[pick(kTail.size())] + "."); break;
    }
    // capitalize sentence start
    if (!out.back().empty() && out.back()[0] >= 'a' && out.back()[0] <= 'z') out.back()[0] -= 32;
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "spellscope-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw Error(ErrorKind::Io, "mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace spellscope::fixture
