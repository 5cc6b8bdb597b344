#include "spellscope/debias.hpp"

#include <algorithm>
#include <thread>

#include "spellscope/text.hpp"

namespace spellscope {

namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

struct Splice {
  std::size_t begin, end;
  std::string text;
};

std::string apply_splices(std::string_view text, const std::vector<Splice>& splices) {
  std::string out;
  out.reserve(text.size() + 8 * splices.size());
  std::size_t at = 0;
  for (const auto& s : splices) {
    out.append(text.substr(at, s.begin - at));
    out += s.text;
    at = s.end;
  }
  out.append(text.substr(at));
  return out;
}

}  // namespace

CaseShape case_shape(std::string_view word) {
  const auto uppers = static_cast<std::size_t>(std::count_if(word.begin(), word.end(), is_upper));
  if (uppers == 0) return CaseShape::Lower;
  if (uppers == word.size()) return word.size() == 1 ? CaseShape::Initial : CaseShape::Upper;
  if (uppers == 1 && is_upper(word.front())) return CaseShape::Initial;
  return CaseShape::Mixed;
}

std::string apply_case(std::string_view lower_word, CaseShape shape) {
  std::string out(lower_word);
  if (shape == CaseShape::Upper) {
    for (char& c : out) c = static_cast<char>(c - 'a' + 'A');
  } else if (shape == CaseShape::Initial && !out.empty()) {
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
  }
  return out;
}

RewriteRecord rewrite(std::string_view text, Side side, const VariantLexicon& lex,
                      std::uint64_t source_id) {
  RewriteRecord r;
  r.source_id = source_id;
  r.side = side;
  const auto rec = normalize_record(text);
  std::vector<Splice> splices;
  for (std::size_t i = 0; i < rec.tokens.size(); ++i) {
    const auto& tok = rec.tokens[i];
    const auto hit = lex.lookup(tok.word);
    if (!hit) continue;
    r.variant_positions.push_back(i);
    if (hit->side == side) continue;
    const auto original = text.substr(tok.begin, tok.end - tok.begin);
    splices.push_back({tok.begin, tok.end, apply_case(hit->pair->form(side), case_shape(original))});
  }
  r.changed = splices.size();
  r.text = splices.empty() ? std::string(text) : apply_splices(text, splices);
  return r;
}

std::string scramble_sides(std::string_view text, const VariantLexicon& lex, ChaChaRng& rng) {
  const auto rec = normalize_record(text);
  std::vector<Splice> splices;
  for (const auto& tok : rec.tokens) {
    const auto hit = lex.lookup(tok.word);
    if (!hit) continue;
    const Side side = rng.below(2) == 0 ? Side::US : Side::UK;
    if (side == hit->side) continue;
    const auto original = text.substr(tok.begin, tok.end - tok.begin);
    splices.push_back({tok.begin, tok.end, apply_case(hit->pair->form(side), case_shape(original))});
  }
  return apply_splices(text, splices);
}

nlohmann::ordered_json to_json(const SyntheticManifest& m) {
  return {{"records_read", m.records_read},
          {"qualifying_sources", m.qualifying_sources},
          {"train_records", m.train_records},
          {"validation_records", m.validation_records},
          {"us_records", m.us_records},
          {"uk_records", m.uk_records},
          {"seed", m.seed},
          {"validation_size", m.validation_size},
          {"lexicon_sha256", m.lexicon_sha256},
          {"case_policy", kCasePolicy},
          {"validation_ids", m.validation_ids}};
}

SyntheticManifest build_synthetic(const StreamFactory& corpus, const VariantLexicon& lex,
                                  RecordWriter& train, RecordWriter& validation,
                                  const SyntheticOptions& opts) {
  if (opts.validation_size % 2 != 0) {
    throw Error(ErrorKind::Config, "validation size must be even (got " +
                                       std::to_string(opts.validation_size) + ")");
  }
  auto has_variant = [&](std::string_view text) {
    for (const auto& w : tokenize_words(text)) {
      if (lex.lookup(w)) return true;
    }
    return false;
  };

  SyntheticManifest m;
  m.seed = opts.seed;
  m.validation_size = opts.validation_size;
  m.lexicon_sha256 = lex.checksum();

  // Pass 1: count qualifying sources.
  {
    auto in = corpus();
    std::string rec;
    while (in->next(rec)) {
      ++m.records_read;
      if (has_variant(rec)) ++m.qualifying_sources;
    }
  }
  if (m.qualifying_sources == 0) throw Error(ErrorKind::DataFormat, "no qualifying records");
  if (opts.validation_size > 2 * m.qualifying_sources) {
    throw Error(ErrorKind::Config, "validation size " + std::to_string(opts.validation_size) +
                                       " exceeds the " + std::to_string(2 * m.qualifying_sources) +
                                       " output records");
  }
  ChaChaRng rng(opts.seed);
  const auto picks = sample_without_replacement(m.qualifying_sources, opts.validation_size / 2, rng);

  // Pass 2: rewrite and split, batch by batch.
  auto in = corpus();
  std::vector<std::string> batch;
  std::vector<std::uint64_t> ids;
  std::vector<std::array<RewriteRecord, 2>> out;
  std::uint64_t ordinal = 0;  // among qualifying sources
  std::size_t next_pick = 0;
  std::uint64_t read = 0;

  auto flush = [&] {
    out.assign(batch.size(), {});
    auto work = [&](std::size_t from, std::size_t to) {
      for (std::size_t i = from; i < to; ++i) {
        out[i] = {rewrite(batch[i], Side::US, lex, ids[i]), rewrite(batch[i], Side::UK, lex, ids[i])};
      }
    };
    const unsigned threads =
        static_cast<unsigned>(std::min<std::size_t>(std::max(opts.workers, 1u), batch.size()));
    if (threads <= 1) {
      work(0, batch.size());
    } else {
      std::vector<std::jthread> pool;
      const std::size_t per = (batch.size() + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        const std::size_t from = t * per;
        const std::size_t to = std::min(batch.size(), from + per);
        if (from < to) pool.emplace_back(work, from, to);
      }
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const bool held_out = next_pick < picks.size() && picks[next_pick] == ordinal;
      if (held_out) {
        ++next_pick;
        m.validation_ids.push_back(ids[i]);
      }
      RecordWriter& dst = held_out ? validation : train;
      for (const auto& r : out[i]) dst.write(r.text);
      (held_out ? m.validation_records : m.train_records) += 2;
      ++m.us_records;
      ++m.uk_records;
      ++ordinal;
    }
    batch.clear();
    ids.clear();
  };

  std::string rec;
  while (in->next(rec)) {
    const std::uint64_t id = read++;
    if (!has_variant(rec)) continue;
    batch.push_back(rec);
    ids.push_back(id);
    if (batch.size() >= opts.batch_records) flush();
  }
  flush();
  if (read != m.records_read || ordinal != m.qualifying_sources) {
    throw Error(ErrorKind::Io, "corpus changed between passes");
  }
  return m;
}

VerificationReport verify_consistency(RecordStream& corpus, const VariantLexicon& lex,
                                      std::size_t max_listed) {
  VerificationReport r;
  std::string rec;
  while (corpus.next(rec)) {
    const auto counts = count_pairs(normalize_record(rec, r.records), lex);
    if (counts.all().mismatched() > 0) {
      ++r.offending_total;
      if (r.offending_records.size() < max_listed) r.offending_records.push_back(r.records);
    }
    r.counts += counts;
    ++r.records;
  }
  return r;
}

nlohmann::ordered_json to_json(const VerificationReport& r) {
  return {{"records", r.records},
          {"consistent", r.ok()},
          {"mismatched_pairs", r.counts.all().mismatched()},
          {"us_matched", r.counts.all().us_matched},
          {"uk_matched", r.counts.all().uk_matched},
          {"offending_records_total", r.offending_total},
          {"offending_records", r.offending_records},
          {"counts", to_json(r.counts)}};
}

}  // namespace spellscope
