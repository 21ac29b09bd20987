#include "swie/probe.hpp"

#include <algorithm>

namespace swie {

ProbeCapture record_attention(const ModelParams& params, std::span<const int> tokens,
                              const SegmentLayout& layout) {
  ProbeCapture cap;
  ForwardOptions opts;
  opts.trace = &cap.trace;
  cap.logits = model_forward(params, tokens, layout, opts);
  return cap;
}

Tensor head_mean(const AttentionTrace& trace, size_t layer) {
  ensure(layer < trace.n_layers, "head_mean: layer out of range");
  const auto& heads = trace.probs[layer];
  ensure(!heads.empty(), "head_mean: no recorded heads");
  Tensor out = Tensor::zeros(heads[0].shape());
  for (const auto& h : heads) {
    ensure(h.shape() == out.shape(), "head_mean: inconsistent head shapes");
    for (size_t i = 0; i < out.size(); ++i) out.at(i) += h.at(i);
  }
  const real inv = real(1) / real(heads.size());
  for (size_t i = 0; i < out.size(); ++i) out.at(i) *= inv;
  return out;
}

real span_accumulate_matrix(const Tensor& attn, size_t sid) {
  const size_t t = attn.rows();
  ensure(attn.cols() == t, "span_accumulate: attention matrix must be square");
  ensure(sid + 1 < t, "span_accumulate: boundary index " + std::to_string(sid) +
                          " has no following positions (T=" + std::to_string(t) + ")");
  real sum = 0;
  for (size_t i = sid + 1; i < t; ++i) sum += attn.at(i, sid);
  return sum;
}

SpanScore span_accumulate(const AttentionTrace& trace, size_t layer, size_t sid, HeadMode mode) {
  (void)mode;  // arithmetic mean is the only aggregation
  SpanScore s;
  s.layer = layer;
  s.boundary = sid;
  s.score = span_accumulate_matrix(head_mean(trace, layer), sid);
  return s;
}

std::vector<LayerRatio> attention_ratio(const AttentionTrace& trace, const SegmentLayout& layout,
                                        HeadMode mode, bool invert) {
  layout.validate();
  ensure(layout.begins.size() >= 3, "attention_ratio: layout must carry three spans");
  const size_t instr_end = layout.begins[SegmentLayout::kInput];
  ensure(instr_end >= 1, "attention_ratio: empty instruction span");
  const size_t input_end = layout.begins[SegmentLayout::kResponse];
  ensure(input_end > instr_end, "attention_ratio: empty input span");
  ensure(input_end < trace.seq_len, "attention_ratio: empty response span");

  std::vector<LayerRatio> out;
  for (size_t layer = 0; layer < trace.n_layers; ++layer) {
    LayerRatio lr;
    lr.layer = layer;
    lr.instruction_end = span_accumulate(trace, layer, instr_end - 1, mode);
    lr.input_end = span_accumulate(trace, layer, input_end - 1, mode);
    const real num = invert ? lr.instruction_end.score : lr.input_end.score;
    const real den = invert ? lr.input_end.score : lr.instruction_end.score;
    if (den > 0) {
      lr.ratio = num / den;
    }  // else left unset: flagged undefined for this layer
    out.push_back(lr);
  }
  return out;
}

void export_report(const std::vector<RatioReport>& reports, const std::string& path) {
  std::vector<const RatioReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RatioReport* a, const RatioReport* b) {
                     return a->model_tag < b->model_tag;
                   });
  std::string out = "layer,span,score,ratio,model_tag\n";
  for (const RatioReport* report : sorted) {
    for (const auto& lr : report->layers) {
      const std::string ratio = lr.ratio ? format_real(*lr.ratio) : "undefined";
      out += std::to_string(lr.layer) + ",instruction_end," +
             format_real(lr.instruction_end.score) + "," + ratio + "," + report->model_tag +
             "\n";
      out += std::to_string(lr.layer) + ",input_end," + format_real(lr.input_end.score) + "," +
             ratio + "," + report->model_tag + "\n";
    }
  }
  write_text_file(path, out);
}

}  // namespace swie
