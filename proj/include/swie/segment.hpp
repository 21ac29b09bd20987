#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "swie/records.hpp"
#include "swie/vocab.hpp"

namespace swie {

// Token-level partition of a sequence into contiguous instruction / input /
// response spans. Segment ids are 0/1/2 in that order so `begins` can be
// indexed by id; `instruction_id` names the weight-zero segment and
// `input_len` is the slope normalizer for the ramp weights.
struct SegmentLayout {
  std::vector<int> segment_ids;   // one per token, piecewise-constant, nondecreasing
  std::vector<size_t> begins;     // begins[s] = index of first token of segment s
  int instruction_id = 0;
  size_t input_len = 0;

  static constexpr int kInstruction = 0;
  static constexpr int kInput = 1;
  static constexpr int kResponse = 2;

  size_t size() const { return segment_ids.size(); }
  std::vector<size_t> instruction_positions() const;
  // index of the last token of segment s (segment must be non-empty)
  size_t segment_end(int s) const;
  void validate() const;
};

// Instruction template bound to a language direction. `[SRC]` / `[TGT]`
// placeholders are replaced by display names via exact string substitution.
struct PromptTemplate {
  std::string base_instruction =
      "Translate the following sentences from [SRC] to [TGT].";
  std::map<std::string, std::string> hint_clauses;  // keyed by hint-type name
  std::string src_name = "German";
  std::string tgt_name = "English";

  std::string substitute(const std::string& text) const;
  // base instruction (+ one hint clause appended after a space)
  std::string render_instruction(HintType hint = HintType::none) const;
};

// default clauses used when a config does not override them
std::map<std::string, std::string> default_hint_clauses();

struct EncodedSample {
  std::vector<int> tokens;
  SegmentLayout layout;
  std::vector<uint8_t> loss_mask;  // true exactly on response positions
};

// Tokenizes the three spans and concatenates them in instruction, input,
// response order. In training mode the response must be non-empty and is
// closed with <eos>; the loss mask covers the response span. In inference
// mode the response span is empty and the mask is all false. When `tmpl` is
// given, [SRC]/[TGT] placeholders in the instruction are substituted first.
EncodedSample assemble_record(const InstructionRecord& record, const Vocab& vocab,
                              const PromptTemplate* tmpl, bool training);

// Ramp weights: 0 on the instruction span; (i - begin(segment)) / input_len
// elsewhere, uncapped.
std::vector<real> segment_weights(const SegmentLayout& layout, size_t total_len);
// Same formula for a single position; positions at or past the end of the
// layout are treated as response continuation (used during generation).
real segment_weight_at(const SegmentLayout& layout, size_t pos);

}  // namespace swie
