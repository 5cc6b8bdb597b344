#include "spellscope/lexicon.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "spellscope/digest.hpp"

namespace spellscope {

namespace {

constexpr std::array<std::pair<SpellingRule, std::string_view>, 7> kRuleNames{{
    {SpellingRule::IZE_ISE, "IZE_ISE"},
    {SpellingRule::IZATION_ISATION, "IZATION_ISATION"},
    {SpellingRule::OR_OUR, "OR_OUR"},
    {SpellingRule::ER_RE, "ER_RE"},
    {SpellingRule::L_DOUBLING, "L_DOUBLING"},
    {SpellingRule::YZE_YSE, "YZE_YSE"},
    {SpellingRule::OTHER, "OTHER"},
}};

// True when uk is us with one occurrence of `from` replaced by `to`.
// `next` restricts the byte following the match, if non-empty.
bool substituted(std::string_view us, std::string_view uk, std::string_view from,
                 std::string_view to, std::string_view next = {}) {
  if (uk.size() + from.size() != us.size() + to.size()) return false;
  for (auto i = us.find(from); i != std::string_view::npos; i = us.find(from, i + 1)) {
    const auto tail = i + from.size();
    if (!next.empty() && (tail >= us.size() || next.find(us[tail]) == std::string_view::npos)) {
      continue;
    }
    if (uk.substr(0, i) == us.substr(0, i) && uk.substr(i, to.size()) == to &&
        uk.substr(i + to.size()) == us.substr(tail)) {
      return true;
    }
  }
  return false;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// uk repeats one consonant of us, and at least one letter of us follows it.
bool consonant_doubled(std::string_view us, std::string_view uk) {
  if (uk.size() != us.size() + 1) return false;
  for (std::size_t i = 0; i + 1 < us.size(); ++i) {
    if (is_vowel(us[i])) continue;
    if (uk.substr(0, i + 1) == us.substr(0, i + 1) && uk[i + 1] == us[i] &&
        uk.substr(i + 2) == us.substr(i + 1)) {
      return true;
    }
  }
  return false;
}

std::string lowered(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

constexpr std::array<NoncePair, 10> kNonce{{
    {"glavor", "glavour"},
    {"menter", "mentre"},
    {"unulize", "unulise"},
    {"malvor", "malvour"},
    {"larbor", "larbour"},
    {"reptalize", "reptalise"},
    {"amolirize", "amolirise"},
    {"sphecter", "sphectre"},
    {"imminize", "imminise"},
    {"voiter", "voitre"},
}};

}  // namespace

std::string_view to_string(SpellingRule r) {
  for (const auto& [rule, name] : kRuleNames) {
    if (rule == r) return name;
  }
  return "OTHER";
}

std::optional<SpellingRule> parse_rule(std::string_view s) {
  for (const auto& [rule, name] : kRuleNames) {
    if (name == s) return rule;
  }
  return std::nullopt;
}

bool is_lower_word(std::string_view w) {
  if (w.empty()) return false;
  for (char c : w) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

SpellingRule classify_rule(std::string_view us, std::string_view uk) {
  if (substituted(us, uk, "ization", "isation")) return SpellingRule::IZATION_ISATION;
  if (substituted(us, uk, "iz", "is")) return SpellingRule::IZE_ISE;
  if (substituted(us, uk, "yz", "ys")) return SpellingRule::YZE_YSE;
  if (substituted(us, uk, "or", "our")) return SpellingRule::OR_OUR;
  // center/centre, and centered/centred where the -re stem meets a vowel suffix.
  if (substituted(us, uk, "er", "re") || substituted(us, uk, "er", "r", "ei")) {
    return SpellingRule::ER_RE;
  }
  if (consonant_doubled(us, uk)) return SpellingRule::L_DOUBLING;
  return SpellingRule::OTHER;
}

VariantLexicon::VariantLexicon(std::vector<VariantPair> pairs) : pairs_(std::move(pairs)) {
  index_.reserve(2 * pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    if (!is_lower_word(p.us) || !is_lower_word(p.uk)) {
      throw Error(ErrorKind::DataFormat,
                  "lexicon entry '" + p.us + "' -> '" + p.uk + "' is not a lowercase a-z word");
    }
    if (p.us == p.uk) {
      throw Error(ErrorKind::DataFormat, "lexicon entry '" + p.us + "' maps to itself");
    }
    for (const Side side : {Side::US, Side::UK}) {
      const auto [it, inserted] = index_.try_emplace(p.form(side), Entry{i, side});
      if (!inserted) {
        const auto& prev = pairs_[it->second.index];
        throw Error(ErrorKind::DataFormat,
                    "word '" + p.form(side) + "' appears in both '" + prev.us + "' -> '" +
                        prev.uk + "' and '" + p.us + "' -> '" + p.uk + "'");
      }
    }
  }
}

std::optional<LexiconHit> VariantLexicon::lookup(std::string_view token) const {
  // Heterogeneous lookup on unordered_map needs C++20 transparent hashing,
  // which libstdc++ 11 does not provide.
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return LexiconHit{&pairs_[it->second.index], it->second.index, it->second.side};
}

std::optional<Side> VariantLexicon::side_of(std::string_view token) const {
  const auto hit = lookup(token);
  if (!hit) return std::nullopt;
  return hit->side;
}

std::string VariantLexicon::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& p : pairs_) j[p.us] = p.uk;
  return j.dump(4) + "\n";
}

std::string VariantLexicon::checksum() const { return sha256_hex(to_json()); }

VariantLexicon parse_lexicon(std::string_view json_text) {
  std::unordered_set<std::string> seen;
  const auto on_event = [&](int depth, nlohmann::ordered_json::parse_event_t event,
                            nlohmann::ordered_json& parsed) {
    if (event == nlohmann::ordered_json::parse_event_t::key && depth == 1) {
      auto key = lowered(parsed.get<std::string>());
      if (!seen.insert(key).second) {
        throw Error(ErrorKind::DataFormat, "duplicate lexicon key '" + key + "'");
      }
    }
    return true;
  };

  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(json_text, on_event);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataFormat, std::string("malformed lexicon JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorKind::DataFormat, "lexicon must be a JSON object of american -> british");
  }

  std::vector<VariantPair> pairs;
  pairs.reserve(doc.size());
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error(ErrorKind::DataFormat, "lexicon value for '" + key + "' is not a string");
    }
    VariantPair p{lowered(key), lowered(value.get<std::string>()), SpellingRule::OTHER};
    if (is_lower_word(p.us) && is_lower_word(p.uk) && p.us != p.uk) {
      p.rule = classify_rule(p.us, p.uk);
    }
    pairs.push_back(std::move(p));
  }
  return VariantLexicon(std::move(pairs));
}

VariantLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open lexicon " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str());
}

VariantLexicon rule_filtered(const VariantLexicon& lex) {
  std::vector<VariantPair> kept;
  for (const auto& p : lex.pairs()) {
    if (p.rule != SpellingRule::OTHER) kept.push_back(p);
  }
  return VariantLexicon(std::move(kept));
}

const std::array<NoncePair, 10>& nonce_table() { return kNonce; }

std::string nonce_table_json() {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& n : kNonce) {
    j.push_back({{"us", n.us}, {"uk", n.uk}});
  }
  return j.dump(2) + "\n";
}

}  // namespace spellscope
