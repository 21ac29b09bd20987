#include "swie/segment.hpp"

#include <algorithm>

namespace swie {

std::vector<size_t> SegmentLayout::instruction_positions() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < segment_ids.size(); ++i)
    if (segment_ids[i] == instruction_id) out.push_back(i);
  return out;
}

size_t SegmentLayout::segment_end(int s) const {
  size_t last = size();
  for (size_t i = 0; i < segment_ids.size(); ++i)
    if (segment_ids[i] == s) last = i;
  ensure(last < size(), "SegmentLayout: segment " + std::to_string(s) + " is empty");
  return last;
}

void SegmentLayout::validate() const {
  ensure(!segment_ids.empty(), "SegmentLayout: empty");
  ensure(input_len >= 1, "SegmentLayout: input_len must be >= 1");
  size_t n_instruction = 0;
  for (size_t i = 1; i < segment_ids.size(); ++i) {
    ensure(segment_ids[i] >= segment_ids[i - 1], "SegmentLayout: segment ids must be nondecreasing");
  }
  for (int id : segment_ids)
    if (id == instruction_id) ++n_instruction;
  ensure(n_instruction > 0, "SegmentLayout: no instruction span");
  for (size_t s = 0; s < begins.size(); ++s) {
    if (begins[s] < segment_ids.size()) {
      // begins[s] must point at the first token carrying id s
      ensure(segment_ids[begins[s]] == static_cast<int>(s),
             "SegmentLayout: begins[" + std::to_string(s) + "] does not start segment");
      ensure(begins[s] == 0 || segment_ids[begins[s] - 1] != static_cast<int>(s),
             "SegmentLayout: begins[" + std::to_string(s) + "] is not the first token");
    } else {
      // allowed only for an empty trailing segment (inference-time response)
      ensure(begins[s] == segment_ids.size(),
             "SegmentLayout: begins[" + std::to_string(s) + "] out of range");
    }
  }
  ensure(static_cast<size_t>(instruction_id) < begins.size(),
         "SegmentLayout: instruction id has no begin entry");
}

std::string PromptTemplate::substitute(const std::string& text) const {
  return replace_all(replace_all(text, "[SRC]", src_name), "[TGT]", tgt_name);
}

std::string PromptTemplate::render_instruction(HintType hint) const {
  std::string out = substitute(base_instruction);
  if (hint != HintType::none) {
    auto it = hint_clauses.find(to_string(hint));
    ensure(it != hint_clauses.end(), "PromptTemplate: no clause for hint '" + to_string(hint) + "'");
    out += " " + it->second;
  }
  return out;
}

std::map<std::string, std::string> default_hint_clauses() {
  return {
      {"no-error", "Make sure the translation contains no errors."},
      {"no-over", "Do not add any content that is absent from the source."},
      {"no-miss", "Do not omit any content that is present in the source."},
      {"no-over/miss", "Do not add or omit any content relative to the source."},
  };
}

EncodedSample assemble_record(const InstructionRecord& record, const Vocab& vocab,
                              const PromptTemplate* tmpl, bool training) {
  ensure(!split_whitespace(record.instruction).empty(), "assemble_record: empty instruction");
  const std::string instruction_text =
      tmpl ? tmpl->substitute(record.instruction) : record.instruction;
  const std::vector<int> instr = tokenize(instruction_text, vocab);
  const std::vector<int> input = tokenize(record.input, vocab);
  std::vector<int> response = tokenize(record.response, vocab);
  ensure(!input.empty(), "assemble_record: empty input span");
  if (training) {
    ensure(!response.empty(), "assemble_record: empty response at training time");
    response.push_back(Vocab::eos_id);
  } else {
    ensure(response.empty(), "assemble_record: inference-time record must have no response");
  }

  EncodedSample s;
  s.tokens.reserve(instr.size() + input.size() + response.size());
  s.tokens.insert(s.tokens.end(), instr.begin(), instr.end());
  s.tokens.insert(s.tokens.end(), input.begin(), input.end());
  s.tokens.insert(s.tokens.end(), response.begin(), response.end());

  auto& L = s.layout;
  L.segment_ids.assign(instr.size(), SegmentLayout::kInstruction);
  L.segment_ids.insert(L.segment_ids.end(), input.size(), SegmentLayout::kInput);
  L.segment_ids.insert(L.segment_ids.end(), response.size(), SegmentLayout::kResponse);
  L.begins = {0, instr.size(), instr.size() + input.size()};
  L.instruction_id = SegmentLayout::kInstruction;
  L.input_len = input.size();
  L.validate();

  s.loss_mask.assign(s.tokens.size(), 0);
  for (size_t i = L.begins[SegmentLayout::kResponse]; i < s.tokens.size(); ++i)
    s.loss_mask[i] = 1;
  return s;
}

std::vector<real> segment_weights(const SegmentLayout& layout, size_t total_len) {
  ensure(total_len == layout.size(), "segment_weights: layout/length mismatch");
  layout.validate();
  std::vector<real> w(total_len);
  for (size_t i = 0; i < total_len; ++i) w[i] = segment_weight_at(layout, i);
  return w;
}

real segment_weight_at(const SegmentLayout& layout, size_t pos) {
  ensure(layout.input_len >= 1, "segment_weight_at: input_len must be >= 1");
  int seg;
  if (pos < layout.size()) {
    seg = layout.segment_ids[pos];
  } else {
    // generation continues the trailing response segment
    seg = static_cast<int>(layout.begins.size()) - 1;
  }
  if (seg == layout.instruction_id) return real(0);
  ensure(static_cast<size_t>(seg) < layout.begins.size(), "segment_weight_at: bad segment id");
  const size_t begin = layout.begins[static_cast<size_t>(seg)];
  return (real(pos) - real(begin)) / real(layout.input_len);
}

}  // namespace swie
