#include "spellscope/corpus_scan.hpp"

#include <sstream>
#include <thread>

namespace spellscope {

namespace {

void checked_add(std::uint64_t& into, std::uint64_t v) {
  if (__builtin_add_overflow(into, v, &into)) {
    throw Error(ErrorKind::DataFormat, "pair count overflowed 64 bits");
  }
}

ConditionalRow normalized_row(std::uint64_t to_us, std::uint64_t to_uk) {
  const double total = static_cast<double>(to_us) + static_cast<double>(to_uk);
  ConditionalRow row;
  row.second_us = static_cast<double>(to_us) / total;
  row.second_uk = static_cast<double>(to_uk) / total;
  row.support = static_cast<std::size_t>(to_us + to_uk);
  return row;
}

nlohmann::ordered_json class_json(const ClassCounts& c) {
  return {{"us_matched", c.us_matched},
          {"uk_matched", c.uk_matched},
          {"mismatched_us_first", c.mismatched_us_first},
          {"mismatched_uk_first", c.mismatched_uk_first},
          {"total", c.total()}};
}

ClassCounts class_from_json(const nlohmann::ordered_json& j) {
  ClassCounts c;
  c.us_matched = j.at("us_matched").get<std::uint64_t>();
  c.uk_matched = j.at("uk_matched").get<std::uint64_t>();
  c.mismatched_us_first = j.at("mismatched_us_first").get<std::uint64_t>();
  c.mismatched_uk_first = j.at("mismatched_uk_first").get<std::uint64_t>();
  return c;
}

nlohmann::ordered_json row_json(const std::optional<ConditionalRow>& row, bool with_std) {
  if (!row) return nullptr;
  nlohmann::ordered_json j{{"US", row->second_us}, {"UK", row->second_uk}};
  if (with_std) {
    j["std_US"] = row->std_us;
    j["std_UK"] = row->std_uk;
  }
  j["support"] = row->support;
  return j;
}

void scan_slice(std::span<const std::string> records, std::uint64_t first_id,
                const VariantLexicon& lex, std::size_t pair_cap, ScanResult& out) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto rec = normalize_record(records[i], first_id + i);
    out.counts += count_pairs(rec, lex);
    auto& d = out.diagnostics;
    ++d.records;
    d.tokens += rec.tokens.size();
    d.invalid_bytes += rec.invalid_bytes;
    std::uint64_t variants = 0;
    for (const auto& t : rec.tokens) {
      if (lex.lookup(t.word)) ++variants;
    }
    d.variant_tokens += variants;
    if (variants >= 2 && variants * (variants - 1) / 2 > pair_cap) ++d.records_over_pair_cap;
  }
}

void scan_batch(std::span<const std::string> batch, std::uint64_t first_id,
                const VariantLexicon& lex, const ScanOptions& opts, ScanResult& total) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(opts.workers, batch.size()));
  if (workers <= 1) {
    scan_slice(batch, first_id, lex, opts.pair_cap, total);
    return;
  }
  std::vector<ScanResult> parts(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t per = (batch.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = std::min(batch.size(), w * per);
    const std::size_t e = std::min(batch.size(), b + per);
    threads.emplace_back([&, w, b, e] {
      scan_slice(batch.subspan(b, e - b), first_id + b, lex, opts.pair_cap, parts[w]);
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& p : parts) {
    total.counts += p.counts;
    total.diagnostics += p.diagnostics;
  }
}

}  // namespace

std::uint64_t ClassCounts::total() const {
  return us_matched + uk_matched + mismatched_us_first + mismatched_uk_first;
}

std::uint64_t ClassCounts::mismatched() const { return mismatched_us_first + mismatched_uk_first; }

std::uint64_t& ClassCounts::operator[](PairClass c) {
  switch (c) {
    case PairClass::UsMatched: return us_matched;
    case PairClass::UkMatched: return uk_matched;
    case PairClass::MismatchedUsFirst: return mismatched_us_first;
    case PairClass::MismatchedUkFirst: return mismatched_uk_first;
  }
  return us_matched;
}

std::uint64_t ClassCounts::operator[](PairClass c) const {
  return const_cast<ClassCounts&>(*this)[c];
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& o) {
  checked_add(us_matched, o.us_matched);
  checked_add(uk_matched, o.uk_matched);
  checked_add(mismatched_us_first, o.mismatched_us_first);
  checked_add(mismatched_uk_first, o.mismatched_uk_first);
  return *this;
}

ClassCounts& ClassCounts::operator-=(const ClassCounts& o) {
  us_matched -= o.us_matched;
  uk_matched -= o.uk_matched;
  mismatched_us_first -= o.mismatched_us_first;
  mismatched_uk_first -= o.mismatched_uk_first;
  return *this;
}

ClassCounts ConsistencyCounts::all() const {
  ClassCounts c = adjacent;
  c += non_adjacent;
  return c;
}

ConsistencyCounts& ConsistencyCounts::operator+=(const ConsistencyCounts& o) {
  adjacent += o.adjacent;
  non_adjacent += o.non_adjacent;
  return *this;
}

ConsistencyCounts merge(const ConsistencyCounts& a, const ConsistencyCounts& b) {
  ConsistencyCounts out = a;
  out += b;
  return out;
}

ScanDiagnostics& ScanDiagnostics::operator+=(const ScanDiagnostics& o) {
  records += o.records;
  tokens += o.tokens;
  variant_tokens += o.variant_tokens;
  invalid_bytes += o.invalid_bytes;
  records_over_pair_cap += o.records_over_pair_cap;
  return *this;
}

std::vector<PairObservation> extract_pairs(const TokenizedRecord& rec, const VariantLexicon& lex,
                                           std::size_t pair_cap) {
  struct Variant {
    std::size_t position;
    Side side;
  };
  std::vector<Variant> variants;
  for (std::size_t i = 0; i < rec.tokens.size(); ++i) {
    if (const auto side = lex.side_of(rec.tokens[i].word)) variants.push_back({i, *side});
  }
  std::vector<PairObservation> out;
  for (std::size_t a = 0; a < variants.size() && out.size() < pair_cap; ++a) {
    for (std::size_t b = a + 1; b < variants.size() && out.size() < pair_cap; ++b) {
      const auto& x = variants[a];
      const auto& y = variants[b];
      out.push_back(PairObservation{rec.tokens[x.position].word, rec.tokens[y.position].word,
                                    x.side, y.side, y.position == x.position + 1});
    }
  }
  return out;
}

ConsistencyCounts count_pairs(const TokenizedRecord& rec, const VariantLexicon& lex) {
  ClassCounts all;
  ClassCounts adjacent;
  std::uint64_t us_before = 0;
  std::uint64_t uk_before = 0;
  std::optional<Side> previous;  // side of the immediately preceding token, if a variant
  for (const auto& tok : rec.tokens) {
    const auto side = lex.side_of(tok.word);
    if (!side) {
      previous.reset();
      continue;
    }
    all[classify_pair(Side::US, *side)] += us_before;
    all[classify_pair(Side::UK, *side)] += uk_before;
    if (previous) ++adjacent[classify_pair(*previous, *side)];
    (*side == Side::US ? us_before : uk_before) += 1;
    previous = side;
  }
  ConsistencyCounts out;
  out.adjacent = adjacent;
  out.non_adjacent = all;
  out.non_adjacent -= adjacent;
  return out;
}

ScanResult scan(RecordStream& records, const VariantLexicon& lex, const ScanOptions& opts) {
  ScanResult total;
  std::vector<std::string> batch;
  batch.reserve(opts.batch_records);
  std::string rec;
  std::uint64_t next_id = 0;
  const auto flush = [&] {
    scan_batch(batch, next_id, lex, opts, total);
    next_id += batch.size();
    batch.clear();
  };
  try {
    while (records.next(rec)) {
      batch.push_back(std::move(rec));
      if (batch.size() >= opts.batch_records) flush();
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Io) throw;
    flush();
    throw Error(ErrorKind::Io, std::string(e.what()) + " (partial progress: " +
                                   std::to_string(total.diagnostics.records) + " records, " +
                                   std::to_string(total.counts.all().total()) + " pairs)");
  }
  flush();
  return total;
}

ScanResult scan(std::span<const std::string> records, const VariantLexicon& lex,
                const ScanOptions& opts) {
  ScanResult total;
  for (std::size_t b = 0; b < records.size(); b += opts.batch_records) {
    const auto n = std::min(opts.batch_records, records.size() - b);
    scan_batch(records.subspan(b, n), b, lex, opts, total);
  }
  return total;
}

ConditionalTable corpus_conditional_table(const ConsistencyCounts& c, Condition condition) {
  const auto& k = c.at(condition);
  ConditionalTable t;
  t.condition = condition;
  if (k.us_matched + k.mismatched_us_first > 0) {
    t.us_first = normalized_row(k.us_matched, k.mismatched_us_first);
  }
  if (k.mismatched_uk_first + k.uk_matched > 0) {
    t.uk_first = normalized_row(k.mismatched_uk_first, k.uk_matched);
  }
  return t;
}

std::int64_t tenths_of_percent(std::uint64_t part, std::uint64_t total) {
  __extension__ using u128 = unsigned __int128;
  const u128 num = static_cast<u128>(part) * 1000;
  auto q = static_cast<std::int64_t>(num / total);
  const u128 rem2 = (num % total) * 2;
  if (rem2 > total || (rem2 == total && (q % 2) == 1)) ++q;
  return q;
}

std::string format_tenths(std::int64_t tenths) {
  const bool neg = tenths < 0;
  const auto mag = neg ? -tenths : tenths;
  return (neg ? "-" : "") + std::to_string(mag / 10) + "." + std::to_string(mag % 10);
}

CorpusReport report(const ConsistencyCounts& c, std::string corpus, Granularity granularity) {
  CorpusReport r;
  r.corpus = std::move(corpus);
  r.granularity = granularity;
  const auto all = c.all();
  r.total_pairs = all.total();
  if (r.total_pairs > 0) {
    r.pct_us_tenths = tenths_of_percent(all.us_matched, r.total_pairs);
    r.pct_uk_tenths = tenths_of_percent(all.uk_matched, r.total_pairs);
    r.pct_mis_tenths = tenths_of_percent(all.mismatched(), r.total_pairs);
  }
  r.adjacent = corpus_conditional_table(c, Condition::Adjacent);
  r.non_adjacent = corpus_conditional_table(c, Condition::NonAdjacent);
  return r;
}

std::string render_tsv(const CorpusReport& r) {
  std::ostringstream out;
  out << "# record_granularity=" << to_string(r.granularity) << '\n';
  if (r.no_pairs()) out << "# no pairs\n";
  out << "corpus\ttotal_pairs\tpct_us\tpct_uk\tpct_mis\n";
  out << r.corpus << '\t' << r.total_pairs << '\t';
  if (r.no_pairs()) {
    out << "NA\tNA\tNA\n";
  } else {
    out << format_tenths(r.pct_us_tenths) << '\t' << format_tenths(r.pct_uk_tenths) << '\t'
        << format_tenths(r.pct_mis_tenths) << '\n';
  }
  return out.str();
}

nlohmann::ordered_json to_json(const ConditionalTable& t) {
  nlohmann::ordered_json j;
  j["condition"] = to_string(t.condition);
  j["macro_averaged"] = t.macro_averaged;
  if (t.macro_averaged) j["template_count"] = t.template_count;
  j["rows"] = {{"US", row_json(t.us_first, t.macro_averaged)},
               {"UK", row_json(t.uk_first, t.macro_averaged)}};
  j["excluded"] = t.excluded;
  return j;
}

nlohmann::ordered_json to_json(const ConsistencyCounts& c) {
  return {{"adjacent", class_json(c.adjacent)},
          {"nonadjacent", class_json(c.non_adjacent)},
          {"all", class_json(c.all())}};
}

ConsistencyCounts counts_from_json(const nlohmann::ordered_json& j) {
  try {
    ConsistencyCounts c;
    const auto& src = j.contains("counts") ? j.at("counts") : j;
    c.adjacent = class_from_json(src.at("adjacent"));
    c.non_adjacent = class_from_json(src.at("nonadjacent"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataFormat, std::string("malformed counts document: ") + e.what());
  }
}

nlohmann::ordered_json report_json(const CorpusReport& r, const ConsistencyCounts& c,
                                   const ScanDiagnostics* diagnostics) {
  nlohmann::ordered_json j;
  j["corpus"] = r.corpus;
  j["record_granularity"] = to_string(r.granularity);
  j["total_pairs"] = r.total_pairs;
  if (r.no_pairs()) {
    j["no_pairs"] = true;
    j["pct_us"] = nullptr;
    j["pct_uk"] = nullptr;
    j["pct_mis"] = nullptr;
  } else {
    j["pct_us"] = static_cast<double>(r.pct_us_tenths) / 10.0;
    j["pct_uk"] = static_cast<double>(r.pct_uk_tenths) / 10.0;
    j["pct_mis"] = static_cast<double>(r.pct_mis_tenths) / 10.0;
  }
  j["counts"] = to_json(c);
  j["conditional"] = {{"adjacent", to_json(r.adjacent)}, {"nonadjacent", to_json(r.non_adjacent)}};
  if (diagnostics != nullptr) {
    j["diagnostics"] = {{"records", diagnostics->records},
                        {"tokens", diagnostics->tokens},
                        {"variant_tokens", diagnostics->variant_tokens},
                        {"invalid_utf8_bytes", diagnostics->invalid_bytes},
                        {"records_over_pair_cap", diagnostics->records_over_pair_cap}};
  }
  return j;
}

}  // namespace spellscope
