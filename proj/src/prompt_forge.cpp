#include "spellscope/prompt_forge.hpp"

#include "spellscope/random.hpp"
#include "spellscope/text.hpp"

namespace spellscope {

namespace {

constexpr std::array<std::string_view, 29> kDefaultTemplates{
    "My preferred words are <CUE> and <FILLER>.",
    "My preferred words are <CUE>, <FILLER>, and tree.",
    "She wrote the words <CUE> and <FILLER>.",
    "She wrote the words <CUE> and <FILLER> in her notebook.",
    "She wrote the words <CUE>, <FILLER>, and cabbage.",
    "I wrote the words <CUE> and <FILLER>.",
    "I wrote the words <CUE> and <FILLER> in my notebook.",
    "I wrote the words <CUE>, <FILLER>, and cabbage.",
    "He wrote the words <CUE> and <FILLER>.",
    "He wrote the words <CUE> and <FILLER> in his notebook.",
    "He wrote the words <CUE>, <FILLER>, and cabbage.",
    "We wrote the words <CUE> and <FILLER>.",
    "We wrote the words <CUE> and <FILLER> in our notebook.",
    "We wrote the words <CUE>, <FILLER>, and cabbage.",
    "Mary wrote the words <CUE> and <FILLER>.",
    "Mary wrote the words <CUE> and <FILLER> in her notebook.",
    "Mary wrote the words <CUE>, <FILLER>, and cabbage.",
    "Please spell <CUE> and <FILLER>.",
    "Please spell <CUE>, <FILLER>, and panther.",
    "Please spell <CUE> and <FILLER> correctly.",
    "Say <CUE> and <FILLER>.",
    "Say <CUE>, <FILLER>, and tapestry.",
    "Say <CUE> and <FILLER> again.",
    "The first words on the list were <CUE> and <FILLER>.",
    "The first words on the list were <CUE>, <FILLER>, and oligarchy.",
    "The easiest words on the list were <CUE> and <FILLER>.",
    "The easiest words on the list were <CUE>, <FILLER>, and oligarchy.",
    "The hardest words on the list were <CUE> and <FILLER>.",
    "The hardest words on the list were <CUE>, <FILLER>, and oligarchy.",
};

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string_view::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

void check_words_neutral(std::string_view text, const VariantLexicon& lex, std::string_view what) {
  for (const auto& w : tokenize_words(text)) {
    if (lex.lookup(w)) {
      throw Error(ErrorKind::DataFormat,
                  std::string(what) + " contains the variant word '" + w + "'");
    }
  }
}

std::string template_words(const PromptTemplate& t) {
  std::string s(t.before_cue());
  s += ' ';
  s += t.between();
  s += ' ';
  s += t.after_filler();
  return s;
}

}  // namespace

std::string_view PromptTemplate::before_cue() const {
  return std::string_view(text).substr(0, text.find(kCueMarker));
}

std::string_view PromptTemplate::between() const {
  const auto b = text.find(kCueMarker) + kCueMarker.size();
  return std::string_view(text).substr(b, text.find(kFillerMarker) - b);
}

std::string_view PromptTemplate::after_filler() const {
  return std::string_view(text).substr(text.find(kFillerMarker) + kFillerMarker.size());
}

PromptTemplate make_template(std::size_t id, std::string text) {
  const auto where = "template " + std::to_string(id) + " '" + text + "'";
  if (count_of(text, kCueMarker) != 1) {
    throw Error(ErrorKind::DataFormat, where + ": needs exactly one <CUE>");
  }
  if (count_of(text, kFillerMarker) != 1) {
    throw Error(ErrorKind::DataFormat, where + ": needs exactly one <FILLER>");
  }
  if (text.find(kCueMarker) > text.find(kFillerMarker)) {
    throw Error(ErrorKind::DataFormat, where + ": <CUE> must come before <FILLER>");
  }
  return PromptTemplate{id, std::move(text)};
}

std::vector<PromptTemplate> parse_templates(std::string_view text, const VariantLexicon* lex) {
  std::vector<PromptTemplate> out;
  auto lines = memory_records(std::string(text));
  std::string line;
  while (lines->next(line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (rtrim(line).empty()) continue;
    out.push_back(make_template(out.size() + 1, line));
  }
  if (lex != nullptr) check_neutral(out, *lex);
  return out;
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path,
                                           const VariantLexicon* lex) {
  return parse_templates(read_file(path), lex);
}

const std::vector<PromptTemplate>& default_templates() {
  static const auto templates = [] {
    std::vector<PromptTemplate> out;
    for (const auto t : kDefaultTemplates) out.push_back(make_template(out.size() + 1, std::string(t)));
    return out;
  }();
  return templates;
}

void check_neutral(std::span<const PromptTemplate> templates, const VariantLexicon& lex) {
  for (const auto& t : templates) {
    check_words_neutral(template_words(t), lex, "template " + std::to_string(t.id));
  }
  check_words_neutral(kNonAdjacentInsertion, lex, "the non-adjacent insertion");
}

std::vector<PairCombo> sample_pairs(const VariantLexicon& lex, std::uint64_t n,
                                    std::uint64_t seed) {
  const std::uint64_t size = lex.size();
  ChaChaRng rng(seed);
  const auto picks = sample_without_replacement(size * size, n, rng);
  std::vector<PairCombo> out;
  out.reserve(picks.size());
  for (const auto k : picks) {
    const auto ci = static_cast<std::size_t>(k / size);
    const auto fi = static_cast<std::size_t>(k % size);
    out.push_back(PairCombo{lex[ci], lex[fi], ci, fi, ci == fi});
  }
  return out;
}

std::string_view ProbeInstance::prefix() const {
  return rtrim(std::string_view(rendered_text).substr(0, filler_offset));
}

std::string_view ProbeInstance::suffix() const {
  return std::string_view(rendered_text).substr(filler_offset + filler_word.size());
}

ProbeInstance render_probe(const PromptTemplate& t, const VariantPair& cue,
                           const VariantPair& filler, Side cue_side, Side filler_side,
                           Condition condition) {
  ProbeInstance p;
  p.template_id = t.id;
  p.condition = condition;
  p.cue_side = cue_side;
  p.filler_side = filler_side;
  p.cue_word = cue.form(cue_side);
  p.filler_word = filler.form(filler_side);
  p.same_lexeme = cue == filler;

  std::string& s = p.rendered_text;
  s.reserve(t.text.size() + kNonAdjacentInsertion.size() + 32);
  s += t.before_cue();
  p.cue_offset = s.size();
  s += p.cue_word;
  auto between = t.between();
  if (condition == Condition::NonAdjacent) {
    // The insertion ends in a comma, so a comma separator is absorbed.
    s += kNonAdjacentInsertion;
    if (!between.empty() && between.front() == ',') between.remove_prefix(1);
  }
  s += between;
  p.filler_offset = s.size();
  s += p.filler_word;
  s += t.after_filler();
  return p;
}

ProbeSet::ProbeSet(std::vector<PromptTemplate> templates, std::vector<PairCombo> pairs,
                   std::vector<Condition> conditions, std::uint64_t seed, std::string kind)
    : templates_(std::move(templates)),
      pairs_(std::move(pairs)),
      conditions_(std::move(conditions)),
      seed_(seed),
      kind_(std::move(kind)) {}

ProbeGroupKey ProbeSet::group(std::size_t g) const {
  ProbeGroupKey key;
  key.index = g;
  key.pair_index = g % pairs_.size();
  const std::size_t rest = g / pairs_.size();
  key.template_index = rest % templates_.size();
  key.condition = conditions_.at(rest / templates_.size());
  return key;
}

std::array<ProbeInstance, 4> ProbeSet::group_instances(std::size_t g) const {
  const auto key = group(g);
  const auto& t = templates_[key.template_index];
  const auto& pc = pairs_[key.pair_index];
  std::array<ProbeInstance, 4> out;
  for (std::size_t s = 0; s < 4; ++s) {
    out[s] = render_probe(t, pc.cue, pc.filler, kSpellings[s].first, kSpellings[s].second,
                          key.condition);
    out[s].pair_id = key.pair_index;
    out[s].same_lexeme = pc.same_lexeme;
  }
  return out;
}

ProbeInstance ProbeSet::instance(std::size_t i) const {
  auto group = group_instances(i / 4);
  return std::move(group[i % 4]);
}

ProbeSet build_probe_set(std::vector<PromptTemplate> templates, std::vector<PairCombo> pairs,
                         std::vector<Condition> conditions, const VariantLexicon& lex,
                         std::uint64_t seed) {
  if (templates.empty()) throw Error(ErrorKind::Config, "probe set needs at least one template");
  if (pairs.empty()) throw Error(ErrorKind::Config, "probe set needs at least one word pair");
  if (conditions.empty()) throw Error(ErrorKind::Config, "probe set needs at least one condition");
  check_neutral(templates, lex);
  return ProbeSet(std::move(templates), std::move(pairs), std::move(conditions), seed, "lexical");
}

ProbeSet build_nonce_set(std::vector<PromptTemplate> templates, std::span<const VariantPair> cues,
                         std::span<const NoncePair> nonce, const VariantLexicon& lex,
                         std::uint64_t seed) {
  std::vector<PairCombo> pairs;
  pairs.reserve(cues.size() * nonce.size());
  for (std::size_t c = 0; c < cues.size(); ++c) {
    for (std::size_t n = 0; n < nonce.size(); ++n) {
      VariantPair filler{std::string(nonce[n].us), std::string(nonce[n].uk),
                         classify_rule(nonce[n].us, nonce[n].uk)};
      const auto hit = lex.lookup(cues[c].us);
      pairs.push_back(PairCombo{cues[c], std::move(filler), hit ? hit->index : c, n, false});
    }
  }
  if (templates.empty()) throw Error(ErrorKind::Config, "probe set needs at least one template");
  if (pairs.empty()) throw Error(ErrorKind::Config, "nonce probe set needs cues and nonce words");
  check_neutral(templates, lex);
  return ProbeSet(std::move(templates), std::move(pairs), {Condition::Adjacent}, seed, "nonce");
}

nlohmann::ordered_json to_json(const ProbeInstance& p) {
  return {{"template_id", p.template_id},
          {"pair_id", p.pair_id},
          {"condition", to_string(p.condition)},
          {"cue_side", to_string(p.cue_side)},
          {"filler_side", to_string(p.filler_side)},
          {"rendered_text", p.rendered_text},
          {"cue_word", p.cue_word},
          {"filler_word", p.filler_word},
          {"cue_offset", p.cue_offset},
          {"filler_offset", p.filler_offset},
          {"same_lexeme", p.same_lexeme}};
}

void write_probes(const ProbeSet& set, RecordWriter& out) {
  for (std::size_t g = 0; g < set.group_count(); ++g) {
    for (const auto& inst : set.group_instances(g)) out.write(to_json(inst).dump());
  }
}

}  // namespace spellscope
