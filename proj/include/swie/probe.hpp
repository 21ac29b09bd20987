#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swie/model.hpp"
#include "swie/segment.hpp"
#include "swie/tensor.hpp"

namespace swie {

// Post-softmax attention matrices captured during one full forward pass.
// Capture is read-only: the recorded copies never feed back into the pass.
struct AttentionTrace {
  size_t n_layers = 0;
  size_t n_heads = 0;
  size_t seq_len = 0;
  // probs[layer][head] is the T x T row-stochastic attention matrix
  std::vector<std::vector<Tensor>> probs;
  SegmentLayout layout;
};

enum class HeadMode { mean };

struct SpanScore {
  size_t layer = 0;
  size_t boundary = 0;  // sid: index of the last token of the span
  real score = 0;
};

struct LayerRatio {
  size_t layer = 0;
  SpanScore instruction_end;
  SpanScore input_end;
  std::optional<real> ratio;  // empty when the denominator vanished
};

struct RatioReport {
  std::string model_tag;
  HeadMode head_mode = HeadMode::mean;
  std::vector<LayerRatio> layers;
};

// Runs a full forward pass with capture enabled and returns the trace with
// the logits it produced.
struct ProbeCapture {
  AttentionTrace trace;
  Tensor logits;
};
ProbeCapture record_attention(const ModelParams& params, std::span<const int> tokens,
                              const SegmentLayout& layout);

// head-aggregated (arithmetic mean) attention matrix of one layer
Tensor head_mean(const AttentionTrace& trace, size_t layer);

// Accumulated attention received by the boundary column from every later
// row: sum over i in (sid, T) of a[i][sid].
real span_accumulate_matrix(const Tensor& attn, size_t sid);
SpanScore span_accumulate(const AttentionTrace& trace, size_t layer, size_t sid,
                          HeadMode mode = HeadMode::mean);

// Per layer: S(end of input) / S(end of instruction). A lower value means
// relatively more attention mass on the instruction. `invert` flips the
// fraction.
std::vector<LayerRatio> attention_ratio(const AttentionTrace& trace,
                                        const SegmentLayout& layout,
                                        HeadMode mode = HeadMode::mean,
                                        bool invert = false);

// CSV with columns layer, span, score, ratio, model_tag; rows sorted by
// (tag, layer) with the instruction row first; full round-trip precision.
void export_report(const std::vector<RatioReport>& reports, const std::string& path);

}  // namespace swie
