#include "swie/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace swie {

using nlohmann::json;

std::string to_string(TranslationErrorType t) {
  return t == TranslationErrorType::miss ? "miss" : "over";
}

std::string error_display_name(TranslationErrorType t) {
  return t == TranslationErrorType::miss ? "miss-translation" : "over-translation";
}

static const char* kMissPrompt =
    "You are an unprofessional [source language] to [target language] translator who is not "
    "fully faithful to the original text in the translation process there is a problem of "
    "omission, i.e. the translation leaves out parts of the original text.\n"
    "Please translate the following [source language] sentence:\n"
    "[source sentence]\n"
    "If the following is a high-quality human [target language] translation:\n"
    "[target sentence]\n"
    "Please give a direct low-quality [target language] translation with omission problems, "
    "noting that you are not simply rewriting the previous translation, but need to emulate a "
    "translator that may have omissions, i.e. omitting parts of the original text.";

static const char* kOverPrompt =
    "You are an [source language] to [target language] translator, but your translation is "
    "not professional. In the translation process, you have not been completely faithful to "
    "the original text, resulting in a translation that is not in the original text.\n"
    "This is a translation illusion problem and you need to give a translation that has the "
    "illusion problem. Please translate the following [source language] sentence:\n"
    "[source sentence]\n"
    "If the following is a high-quality human [target language]translation:\n"
    "[target sentence]\n"
    "Please give a straightforward low-quality [target language] translation that has an "
    "additive translation problem or a translation illusion problem. Please note that you "
    "need to simulate a translator with possible translation enhancement problems and "
    "translate what is not in the original text, rather than simply rewriting the previous "
    "translation.";

std::string render_llm_prompt(const ParallelPair& pair, TranslationErrorType type,
                              const std::map<std::string, std::string>& language_names) {
  auto name = [&](const std::string& tag) -> const std::string& {
    auto it = language_names.find(tag);
    ensure(it != language_names.end(), "render_llm_prompt: unknown language tag '" + tag + "'");
    return it->second;
  };
  std::string out = type == TranslationErrorType::miss ? kMissPrompt : kOverPrompt;
  out = replace_all(out, "[source language]", name(pair.src_lang));
  out = replace_all(out, "[target language]", name(pair.tgt_lang));
  out = replace_all(out, "[source sentence]", pair.source);
  out = replace_all(out, "[target sentence]", pair.target);
  return out;
}

std::string llm_generate_negative(const std::string& prompt, ExternalTextClient& client) {
  return client.complete(prompt);
}

OfflineCorruptor::OfflineCorruptor(const TranslationTable& table,
                                   const std::vector<ParallelPair>& donors, CorruptPolicy policy)
    : table_(&table), donors_(&donors), policy_(policy) {
  ensure(!donors.empty(), "OfflineCorruptor: donor pool is empty");
}

namespace {

// FNV-1a; std::hash is not pinned across standard libraries
uint64_t text_hash(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct SpanInfo {
  size_t begin = 0, length = 0;
  real aligned_source_fraction = 0;
};

std::vector<std::string> folded(const std::vector<std::string>& toks, bool lower) {
  if (!lower) return toks;
  std::vector<std::string> out;
  out.reserve(toks.size());
  for (const auto& t : toks) out.push_back(lowercase(t));
  return out;
}

// fraction of source tokens whose links land inside the target span [a, a+len)
real span_source_fraction(const AlignmentLinks& links, size_t n_src, size_t a, size_t len) {
  std::vector<uint8_t> hit(n_src, 0);
  for (const auto& [i, j] : links.links) {
    if (j >= a && j < a + len) hit[i] = 1;
  }
  size_t n = 0;
  for (uint8_t h : hit) n += h;
  return real(n) / real(n_src);
}

// all contiguous spans keeping at least one token, annotated with the aligned
// source fraction, ordered by distance from the window midpoint (stable)
std::vector<SpanInfo> ranked_spans(const AlignmentLinks& links, size_t n_src, size_t n_tgt,
                                   size_t max_len, real lo, real hi) {
  std::vector<SpanInfo> spans;
  for (size_t len = 1; len <= std::min(max_len, n_tgt - 1); ++len) {
    for (size_t a = 0; a + len <= n_tgt; ++a) {
      SpanInfo s;
      s.begin = a;
      s.length = len;
      s.aligned_source_fraction = span_source_fraction(links, n_src, a, len);
      spans.push_back(s);
    }
  }
  const real mid = (lo + hi) / real(2);
  std::stable_sort(spans.begin(), spans.end(), [&](const SpanInfo& x, const SpanInfo& y) {
    const bool xin = x.aligned_source_fraction >= lo && x.aligned_source_fraction <= hi;
    const bool yin = y.aligned_source_fraction >= lo && y.aligned_source_fraction <= hi;
    if (xin != yin) return xin;
    const real dx = std::abs(x.aligned_source_fraction - mid);
    const real dy = std::abs(y.aligned_source_fraction - mid);
    if (dx != dy) return dx < dy;
    if (x.begin != y.begin) return x.begin < y.begin;
    return x.length < y.length;
  });
  return spans;
}

std::vector<std::string> delete_span(const std::vector<std::string>& toks, size_t a, size_t len) {
  std::vector<std::string> out;
  out.reserve(toks.size() - len);
  out.insert(out.end(), toks.begin(), toks.begin() + static_cast<long>(a));
  out.insert(out.end(), toks.begin() + static_cast<long>(a + len), toks.end());
  return out;
}

}  // namespace

std::string OfflineCorruptor::corrupt(const ParallelPair& pair, TranslationErrorType type,
                                      uint64_t seed) const {
  const auto src_toks = split_whitespace(pair.source);
  const auto tgt_toks = split_whitespace(pair.target);
  ensure(!src_toks.empty(), "corrupt: empty source");
  if (tgt_toks.size() < policy_.min_target_tokens) {
    throw SkipPair("corrupt: target too short (" + std::to_string(tgt_toks.size()) + " < " +
                   std::to_string(policy_.min_target_tokens) + " tokens)");
  }

  const bool lower = table_->lowercased();
  const auto src_f = folded(src_toks, lower);
  const auto tgt_f = folded(tgt_toks, lower);
  const AlignmentLinks links = align_pair(src_f, tgt_f, *table_, policy_.link_threshold);
  const CoverageScore ref_cov = coverage(src_f, tgt_f, links);

  Rng rng(mix_seed(mix_seed(seed, text_hash(pair.source)),
                   type == TranslationErrorType::miss ? 0x6d697373ULL : 0x6f766572ULL));

  // donor fragment in the target language, from an unrelated reference
  auto draw_fragment = [&](size_t min_len, size_t max_len) {
    for (int tries = 0; tries < 32; ++tries) {
      const ParallelPair& donor = (*donors_)[rng.below(donors_->size())];
      if (donor.target == pair.target) continue;
      const auto donor_toks = split_whitespace(donor.target);
      if (donor_toks.empty()) continue;
      const size_t len =
          std::min(donor_toks.size(),
                   static_cast<size_t>(rng.range(static_cast<int64_t>(min_len),
                                                 static_cast<int64_t>(max_len))));
      const size_t start = rng.below(donor_toks.size() - len + 1);
      return std::vector<std::string>(donor_toks.begin() + static_cast<long>(start),
                                      donor_toks.begin() + static_cast<long>(start + len));
    }
    fail("corrupt: could not draw a donor fragment");
  };

  auto recompute = [&](const std::vector<std::string>& toks) {
    return coverage(src_f, folded(toks, lower), align_pair(src_f, folded(toks, lower), *table_,
                                                           policy_.link_threshold));
  };

  if (type == TranslationErrorType::miss) {
    // dominant edit: delete a fragment whose aligned source words cover the
    // configured fraction of the source
    const auto spans = ranked_spans(links, src_toks.size(), tgt_toks.size(),
                                    tgt_toks.size() - 1, policy_.miss_span_cov_lo,
                                    policy_.miss_span_cov_hi);
    ensure(!spans.empty(), "corrupt: no deletable spans");
    const size_t shortlist = std::min<size_t>(4, spans.size());
    std::vector<std::string> best;
    for (size_t attempt = 0; attempt < shortlist; ++attempt) {
      const SpanInfo& span =
          spans[(rng.below(shortlist) + attempt) % shortlist];  // seeded first pick, then scan
      auto out = delete_span(tgt_toks, span.begin, span.length);
      const auto frag = draw_fragment(policy_.miss_insert_min, policy_.miss_insert_max);
      const size_t at = rng.below(out.size() + 1);
      out.insert(out.begin() + static_cast<long>(at), frag.begin(), frag.end());
      if (best.empty()) best = out;
      const CoverageScore c = recompute(out);
      if (c.source_coverage < ref_cov.source_coverage) {
        best = out;
        break;
      }
    }
    const std::string result = join(best, " ");
    ensure(!result.empty() && result != pair.target, "corrupt: degenerate miss corruption");
    return result;
  }

  // over: splice a foreign fragment over a weakly-aligned sliver
  const auto spans =
      ranked_spans(links, src_toks.size(), tgt_toks.size(), 2, policy_.over_delete_cov_lo,
                   policy_.over_delete_cov_hi);
  ensure(!spans.empty(), "corrupt: no splice spans");
  const size_t shortlist = std::min<size_t>(4, spans.size());
  std::vector<std::string> best;
  for (size_t attempt = 0; attempt < shortlist + 2; ++attempt) {
    const SpanInfo& span = spans[(attempt < shortlist) ? (rng.below(shortlist) + attempt) % shortlist
                                                       : attempt % shortlist];
    auto out = delete_span(tgt_toks, span.begin, span.length);
    const auto frag = draw_fragment(policy_.over_insert_min, policy_.over_insert_max);
    const size_t at = rng.below(out.size() + 1);
    out.insert(out.begin() + static_cast<long>(at), frag.begin(), frag.end());
    if (best.empty()) best = out;
    const CoverageScore c = recompute(out);
    if (c.target_coverage < ref_cov.target_coverage) {
      best = out;
      break;
    }
  }
  const std::string result = join(best, " ");
  ensure(!result.empty() && result != pair.target, "corrupt: degenerate over corruption");
  return result;
}

std::string SynthesisReport::to_json() const {
  json j;
  auto cat = [](const CategoryStats& c) {
    json cj;
    cj["count"] = c.count;
    cj["source_coverage"] = c.source_coverage;
    cj["target_coverage"] = c.target_coverage;
    return cj;
  };
  j["version"] = 1;
  j["categories"]["reference"] = cat(reference);
  j["categories"]["miss"] = cat(miss);
  j["categories"]["over"] = cat(over);
  j["kept"]["miss"] = kept_miss;
  j["kept"]["over"] = kept_over;
  j["rejections"]["miss"] = rejections_miss;
  j["rejections"]["over"] = rejections_over;
  return j.dump(2);
}

void SynthesisReport::save(const std::string& path) const { write_text_file(path, to_json()); }

std::pair<std::vector<NegativeSample>, SynthesisReport> filter_by_coverage(
    std::vector<NegativeSample> candidates, const std::vector<ParallelPair>& reference_pairs,
    const TranslationTable& table, real link_threshold, const FilterPolicy& policy) {
  SynthesisReport report;
  // reference statistics over the whole batch of pairs
  for (const auto& p : reference_pairs) {
    const CoverageScore c = pair_coverage(p.source, p.target, table, link_threshold);
    report.reference.count += 1;
    report.reference.source_coverage += c.source_coverage;
    report.reference.target_coverage += c.target_coverage;
  }
  if (report.reference.count > 0) {
    report.reference.source_coverage /= real(report.reference.count);
    report.reference.target_coverage /= real(report.reference.count);
  }

  std::vector<NegativeSample> kept;
  for (auto& cand : candidates) {
    const CoverageScore ref =
        pair_coverage(cand.pair.source, cand.pair.target, table, link_threshold);
    const CoverageScore neg =
        pair_coverage(cand.pair.source, cand.corrupted, table, link_threshold);
    cand.reference_coverage = ref;
    cand.corrupted_coverage = neg;
    auto& rejections = cand.error_type == TranslationErrorType::miss ? report.rejections_miss
                                                                     : report.rejections_over;
    if (cand.corrupted.empty() || cand.corrupted == cand.pair.target) {
      rejections["identical_or_empty"] += 1;
      continue;
    }
    bool drop_ok, retention_ok;
    if (cand.error_type == TranslationErrorType::miss) {
      drop_ok = neg.source_coverage < ref.source_coverage - policy.delta;
      retention_ok = neg.target_coverage >= policy.rho;
    } else {
      drop_ok = neg.target_coverage < ref.target_coverage - policy.delta;
      retention_ok = neg.source_coverage >= policy.rho;
    }
    if (!drop_ok) {
      rejections["no_coverage_drop"] += 1;
      continue;
    }
    if (!retention_ok) {
      rejections["low_retention"] += 1;
      continue;
    }
    kept.push_back(std::move(cand));
  }

  for (const auto& k : kept) {
    CategoryStats& cat = k.error_type == TranslationErrorType::miss ? report.miss : report.over;
    cat.count += 1;
    cat.source_coverage += k.corrupted_coverage.source_coverage;
    cat.target_coverage += k.corrupted_coverage.target_coverage;
  }
  for (CategoryStats* cat : {&report.miss, &report.over}) {
    if (cat->count > 0) {
      cat->source_coverage /= real(cat->count);
      cat->target_coverage /= real(cat->count);
    }
  }
  report.kept_miss = report.miss.count;
  report.kept_over = report.over.count;
  return {std::move(kept), std::move(report)};
}

RecordTemplates::RecordTemplates() : hints(default_hint_clauses()) {}

PromptTemplate RecordTemplates::prompt_template(const std::string& src_lang,
                                                const std::string& tgt_lang) const {
  PromptTemplate t;
  t.base_instruction = base_instruction;
  t.hint_clauses = hints;
  t.src_name = language_name(src_lang);
  t.tgt_name = language_name(tgt_lang);
  return t;
}

const std::string& RecordTemplates::language_name(const std::string& tag) const {
  auto it = language_names.find(tag);
  ensure(it != language_names.end(), "RecordTemplates: unknown language tag '" + tag + "'");
  return it->second;
}

std::vector<InstructionRecord> build_overmiss_records(const ParallelPair& pair,
                                                      const NegativeSample& negative,
                                                      const RecordTemplates& templates,
                                                      const std::vector<RecordKind>& modes) {
  const PromptTemplate tmpl = templates.prompt_template(pair.src_lang, pair.tgt_lang);
  const std::string error_name = error_display_name(negative.error_type);
  std::vector<InstructionRecord> out;
  for (RecordKind mode : modes) {
    switch (mode) {
      case RecordKind::plain: {
        InstructionRecord r;
        r.instruction = tmpl.render_instruction(HintType::none);
        r.input = pair.source;
        r.response = pair.target;
        r.kind = RecordKind::plain;
        out.push_back(std::move(r));
        break;
      }
      case RecordKind::contrastive: {
        InstructionRecord r;
        std::string instr = templates.contrastive_instruction;
        instr = replace_all(instr, "[SRC]", templates.language_name(pair.src_lang));
        instr = replace_all(instr, "[TGT]", templates.language_name(pair.tgt_lang));
        instr = replace_all(instr, "[ERROR]", error_name);
        std::string input = templates.contrastive_input;
        input = replace_all(input, "[SOURCE]", pair.source);
        input = replace_all(input, "[DRAFT]", negative.corrupted);
        input = replace_all(input, "[ERROR]", error_name);
        r.instruction = std::move(instr);
        r.input = std::move(input);
        r.response = pair.target;  // the correct translation, verbatim
        r.kind = RecordKind::contrastive;
        out.push_back(std::move(r));
        break;
      }
      case RecordKind::hinted: {
        const HintType matching = negative.error_type == TranslationErrorType::miss
                                      ? HintType::no_miss
                                      : HintType::no_over;
        for (HintType hint : {matching, HintType::no_over_miss}) {
          InstructionRecord r;
          r.instruction = tmpl.render_instruction(hint);
          r.input = pair.source;
          r.response = pair.target;
          r.hint_type = hint;
          r.kind = RecordKind::hinted;
          out.push_back(std::move(r));
        }
        break;
      }
    }
  }
  return out;
}

SynthesisOutput synthesize(const ParallelCorpus& corpus, const SynthesisConfig& config,
                           const RecordTemplates& templates, ExternalTextClient* client) {
  ensure(!corpus.pairs.empty(), "synthesize: empty corpus");
  ensure(config.offline || client, "synthesize: online mode requires a client");

  SynthesisOutput out;
  out.table = TranslationTable::train_ibm1(corpus.pairs, config.em_iterations);
  CorruptPolicy cpolicy = config.corrupt;
  cpolicy.link_threshold = config.link_threshold;
  OfflineCorruptor corruptor(out.table, corpus.pairs, cpolicy);

  const bool want_plain = std::find(config.modes.begin(), config.modes.end(),
                                    RecordKind::plain) != config.modes.end();
  std::vector<RecordKind> aux_modes;
  for (RecordKind m : config.modes)
    if (m != RecordKind::plain) aux_modes.push_back(m);

  std::vector<NegativeSample> candidates;
  SynthesisReport pre_report;  // rejection counters accumulated before filtering
  for (size_t i = 0; i < corpus.pairs.size(); ++i) {
    const ParallelPair& pair = corpus.pairs[i];
    if (want_plain) {
      const PromptTemplate tmpl = templates.prompt_template(pair.src_lang, pair.tgt_lang);
      InstructionRecord r;
      r.instruction = tmpl.render_instruction(HintType::none);
      r.input = pair.source;
      r.response = pair.target;
      r.kind = RecordKind::plain;
      out.plain_records.push_back(std::move(r));
    }
    for (TranslationErrorType type : {TranslationErrorType::miss, TranslationErrorType::over}) {
      auto& rejections = type == TranslationErrorType::miss ? pre_report.rejections_miss
                                                            : pre_report.rejections_over;
      NegativeSample cand;
      cand.pair = pair;
      cand.error_type = type;
      const uint64_t pair_seed = mix_seed(config.seed, i);
      if (config.offline) {
        try {
          cand.corrupted = corruptor.corrupt(pair, type, pair_seed);
          cand.provenance = NegativeSample::Provenance::offline_corruptor;
        } catch (const SkipPair&) {
          rejections["too_short"] += 1;
          continue;
        }
      } else {
        const std::string prompt =
            render_llm_prompt(pair, type, templates.language_names);
        try {
          cand.corrupted = llm_generate_negative(prompt, *client);
          cand.provenance = NegativeSample::Provenance::external_llm;
        } catch (const ClientError& e) {
          if (e.kind == ClientError::Kind::malformed) {
            rejections["malformed_completion"] += 1;
            continue;
          }
          if (config.fallback_to_offline) {
            try {
              cand.corrupted = corruptor.corrupt(pair, type, pair_seed);
              cand.provenance = NegativeSample::Provenance::offline_corruptor;
            } catch (const SkipPair&) {
              rejections["too_short"] += 1;
              continue;
            }
          } else {
            throw;
          }
        }
        if (cand.corrupted.empty()) {
          rejections["malformed_completion"] += 1;
          continue;
        }
      }
      candidates.push_back(std::move(cand));
    }
  }

  auto [kept, report] =
      filter_by_coverage(std::move(candidates), corpus.pairs, out.table, config.link_threshold,
                         config.filter);
  for (const auto& [reason, n] : pre_report.rejections_miss) report.rejections_miss[reason] += n;
  for (const auto& [reason, n] : pre_report.rejections_over) report.rejections_over[reason] += n;
  out.kept = std::move(kept);
  out.report = std::move(report);

  for (const auto& neg : out.kept) {
    auto records = build_overmiss_records(neg.pair, neg, templates, aux_modes);
    out.auxiliary_records.insert(out.auxiliary_records.end(),
                                 std::make_move_iterator(records.begin()),
                                 std::make_move_iterator(records.end()));
  }
  return out;
}

}  // namespace swie
