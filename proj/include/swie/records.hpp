#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swie/common.hpp"

namespace swie {

enum class HintType { none, no_error, no_over, no_miss, no_over_miss };
enum class RecordKind { plain, contrastive, hinted };

std::string to_string(HintType h);
std::string to_string(RecordKind k);
HintType hint_type_from_string(const std::string& s);
RecordKind record_kind_from_string(const std::string& s);
const std::vector<std::string>& hint_type_names();

// One instruction-tuning item: instruction / input / response, with the hint
// tag carried by the instruction text and the record family it came from.
struct InstructionRecord {
  std::string instruction;
  std::string input;
  std::string response;
  HintType hint_type = HintType::none;
  RecordKind kind = RecordKind::plain;
};

// Strict JSON-Lines round trip. Unknown fields and missing required fields
// are reported with their 1-based line number.
std::vector<InstructionRecord> load_records(const std::string& path);
void save_records(const std::string& path, const std::vector<InstructionRecord>& records);

// A sentence pair from a bilingual corpus.
struct ParallelPair {
  std::string source;
  std::string target;
  std::string src_lang;
  std::string tgt_lang;
};

struct ParallelCorpus {
  std::string src_lang;
  std::string tgt_lang;
  std::vector<ParallelPair> pairs;
};

// Tab-separated source/target per line; first line is a '#'-prefixed header
// carrying the two language tags.
ParallelCorpus load_parallel_tsv(const std::string& path);
void save_parallel_tsv(const std::string& path, const ParallelCorpus& corpus);

// Merges runs of k consecutive sentences (k drawn per group from
// [k_min, k_max] with the given seed) on both sides, single-space joined.
// No sentence is used twice; a short tail becomes a final smaller group.
std::vector<ParallelPair> concat_adjacent(const std::vector<ParallelPair>& pairs,
                                          size_t k_min, size_t k_max, uint64_t seed);

}  // namespace swie
