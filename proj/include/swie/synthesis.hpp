#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swie/align.hpp"
#include "swie/llm_client.hpp"
#include "swie/records.hpp"
#include "swie/segment.hpp"

namespace swie {

enum class TranslationErrorType { miss, over };
std::string to_string(TranslationErrorType t);
// display name used inside record templates ("miss-translation" / "over-translation")
std::string error_display_name(TranslationErrorType t);

// A candidate degraded translation for one pair, with the coverage evidence
// attached by the filter.
struct NegativeSample {
  ParallelPair pair;
  std::string corrupted;
  TranslationErrorType error_type = TranslationErrorType::miss;
  enum class Provenance { external_llm, offline_corruptor };
  Provenance provenance = Provenance::offline_corruptor;
  CoverageScore reference_coverage;
  CoverageScore corrupted_coverage;
};

// thrown when a pair cannot be corrupted (target too short)
struct SkipPair : Error {
  using Error::Error;
  explicit SkipPair(const std::string& what) : Error(what) {}
};

// Exact degraded-translation request templates, with [source language],
// [target language], [source sentence], [target sentence] substituted by
// plain string replacement. Unknown language tags are an error.
std::string render_llm_prompt(const ParallelPair& pair, TranslationErrorType type,
                              const std::map<std::string, std::string>& language_names);

// one completion from the external service (retry/backoff lives in the client)
std::string llm_generate_negative(const std::string& prompt, ExternalTextClient& client);

struct CorruptPolicy {
  // deleted fragment's aligned source words must cover this fraction window
  real miss_span_cov_lo = real(0.20);
  real miss_span_cov_hi = real(0.40);
  size_t miss_insert_min = 1;  // small foreign insertion, keeps the output fluent-ish
  size_t miss_insert_max = 2;
  size_t over_insert_min = 3;  // foreign fragment spliced into the target
  size_t over_insert_max = 8;
  real over_delete_cov_lo = real(0.05);  // small deletion paired with the insertion
  real over_delete_cov_hi = real(0.15);
  size_t min_target_tokens = 4;
  real link_threshold = real(0.1);
};

// Deterministic stand-in for the external service: a miss candidate deletes a
// well-aligned contiguous target fragment (plus a 1-2 token foreign splice);
// an over candidate splices a 3-8 token fragment from an unrelated reference
// over a weakly-aligned sliver. Same (pair, type, seed) always yields the
// same text.
class OfflineCorruptor {
 public:
  OfflineCorruptor(const TranslationTable& table, const std::vector<ParallelPair>& donors,
                   CorruptPolicy policy = {});
  std::string corrupt(const ParallelPair& pair, TranslationErrorType type, uint64_t seed) const;

 private:
  const TranslationTable* table_;
  const std::vector<ParallelPair>* donors_;
  CorruptPolicy policy_;
};

struct FilterPolicy {
  real delta = real(0.10);  // required coverage drop on the error side
  real rho = real(0.40);    // required retained coverage on the other side
};

struct CategoryStats {
  size_t count = 0;
  real source_coverage = 0;  // mean over the category
  real target_coverage = 0;
};

struct SynthesisReport {
  CategoryStats reference, miss, over;
  std::map<std::string, size_t> rejections_miss;
  std::map<std::string, size_t> rejections_over;
  size_t kept_miss = 0, kept_over = 0;
  std::string to_json() const;
  void save(const std::string& path) const;
};

// Applies the coverage gate: a miss candidate must drop source coverage by
// delta below its reference while retaining rho target coverage; an over
// candidate symmetric. Rejections are counted, never fatal.
std::pair<std::vector<NegativeSample>, SynthesisReport> filter_by_coverage(
    std::vector<NegativeSample> candidates,
    const std::vector<ParallelPair>& reference_pairs, const TranslationTable& table,
    real link_threshold, const FilterPolicy& policy);

// Config-owned record templates (kept in the run config, not in code).
struct RecordTemplates {
  std::string base_instruction = "Translate the following sentences from [SRC] to [TGT].";
  std::map<std::string, std::string> hints;  // hint name -> clause
  std::string contrastive_instruction =
      "Translate the following sentences from [SRC] to [TGT]. A draft translation with a "
      "known [ERROR] problem follows the source; write a corrected translation that is "
      "fully faithful to the source.";
  std::string contrastive_input = "[SOURCE]\nDraft with [ERROR]: [DRAFT]";
  std::map<std::string, std::string> language_names = {
      {"de", "German"}, {"en", "English"}, {"fr", "French"}, {"zh", "Chinese"}};

  RecordTemplates();
  PromptTemplate prompt_template(const std::string& src_lang, const std::string& tgt_lang) const;
  const std::string& language_name(const std::string& tag) const;
};

// Emits, per requested kind: a plain record for the pair, a contrastive
// record carrying the flawed draft and its error type, and hinted records
// (the hint matching the error type plus the combined no-over/miss hint).
std::vector<InstructionRecord> build_overmiss_records(const ParallelPair& pair,
                                                      const NegativeSample& negative,
                                                      const RecordTemplates& templates,
                                                      const std::vector<RecordKind>& modes);

struct SynthesisConfig {
  int em_iterations = 8;
  real link_threshold = real(0.1);
  FilterPolicy filter;
  CorruptPolicy corrupt;
  std::vector<RecordKind> modes = {RecordKind::plain, RecordKind::contrastive,
                                   RecordKind::hinted};
  bool offline = true;              // never touch the external service
  bool fallback_to_offline = true;  // on client failure
  uint64_t seed = 1;
};

struct SynthesisOutput {
  TranslationTable table;
  std::vector<NegativeSample> kept;
  SynthesisReport report;
  std::vector<InstructionRecord> plain_records;      // stage-1 data
  std::vector<InstructionRecord> auxiliary_records;  // stage-2 data (contrastive + hinted)
};

// End-to-end offline pipeline: train the aligner on the corpus, corrupt every
// pair both ways, filter by coverage, and assemble records. Pure function of
// (corpus, seed, policy) in offline mode.
SynthesisOutput synthesize(const ParallelCorpus& corpus, const SynthesisConfig& config,
                           const RecordTemplates& templates,
                           ExternalTextClient* client = nullptr);

}  // namespace swie
