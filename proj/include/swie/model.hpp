#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swie/ops.hpp"
#include "swie/segment.hpp"
#include "swie/tensor.hpp"

namespace swie {

struct AttentionTrace;  // defined in probe.hpp

struct ModelConfig {
  size_t n_layers = 2;
  size_t n_heads = 2;
  size_t model_dim = 32;
  size_t ffn_dim = 64;
  size_t vocab_size = 0;
  size_t max_seq_len = 128;
  size_t adapter_dim = 32;
  bool swie_enabled = true;
  // empty means "middle three layers"; explicit indexes override
  std::vector<size_t> swie_layers;
  real layer_norm_eps = real(1e-5);

  static std::vector<size_t> middle_three(size_t n_layers);
  std::vector<size_t> resolved_swie_layers() const;
  bool is_swie_layer(size_t layer) const;
  size_t head_dim() const { return model_dim / n_heads; }
  void validate() const;
};

// Bottleneck adapter over the pooled instruction representation. The
// up-projection starts at zero so a freshly initialized adapter is the zero
// function and the fused model coincides with the baseline.
struct AdapterParams {
  Tensor down_w;  // d x adapter_dim
  Tensor down_b;  // adapter_dim
  Tensor up_w;    // adapter_dim x d
  Tensor up_b;    // d
};

struct LayerParams {
  Tensor attn_q_w, attn_q_b;
  Tensor attn_k_w, attn_k_b;
  Tensor attn_v_w, attn_v_b;
  Tensor attn_o_w, attn_o_b;
  Tensor ln1_g, ln1_b;
  Tensor ln2_g, ln2_b;
  Tensor ff_in_w, ff_in_b;    // d x ffn
  Tensor ff_out_w, ff_out_b;  // ffn x d
  std::optional<AdapterParams> adapter;  // present iff layer is a fusion layer
};

struct ModelParams {
  ModelConfig config;
  Tensor tok_embed;  // V x d
  Tensor pos_embed;  // max_seq_len x d
  std::vector<LayerParams> layers;
  Tensor final_ln_g, final_ln_b;
  Tensor head_w;  // d x V
  Tensor head_b;  // V

  static ModelParams init(const ModelConfig& config, Rng& rng);

  // stable, checkpoint-facing naming; visits parameters in a fixed order
  void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_param(const std::function<void(const std::string&, const Tensor&)>& fn) const;
  void set_requires_grad(bool rg);
  void zero_grad();
};

// Per-layer cached keys/values plus, for fusion layers, the adapter output
// computed once from the prompt's instruction span.
struct KVCache {
  struct LayerCache {
    Tensor keys;    // len x d, grows as positions are consumed
    Tensor values;  // len x d
    Tensor instruction_feature;  // 1 x d adapter output, fusion layers only
  };
  std::vector<LayerCache> layers;
  size_t length = 0;

  explicit KVCache(const ModelConfig& config) : layers(config.n_layers) {}
};

struct ForwardOptions {
  Graph* graph = nullptr;
  AttentionTrace* trace = nullptr;  // full (non-cached) passes only
  KVCache* cache = nullptr;
};

// Runs the decoder stack and returns logits, one row per consumed token.
// Without a cache, `tokens` is the whole sequence. With a cache, `tokens` is
// the suffix that starts at absolute position cache->length; the first cached
// call must cover the whole prompt (the instruction span is pooled then).
Tensor model_forward(const ModelParams& params, std::span<const int> tokens,
                     const SegmentLayout& layout, const ForwardOptions& opts = {});

// per-dimension max over the instruction rows of a hidden state
Tensor instruction_embedding(const Tensor& hidden, const SegmentLayout& layout,
                             Graph* g = nullptr);

// hidden[i] += weight(i) * adapter(max-pool of instruction rows); instruction
// rows keep weight 0 and are returned unchanged
Tensor swie_fuse(const Tensor& hidden, const SegmentLayout& layout,
                 const AdapterParams& adapter, Graph* g = nullptr);

// Greedy autoregressive continuation of a prompt whose layout carries an
// empty trailing response span. Generated positions take the response segment
// id; fusion reuses the adapter output cached from the prompt pass. Stops at
// <eos>, max_new tokens, or the model's max sequence length.
std::vector<int> generate(const ModelParams& params, std::span<const int> prompt,
                          const SegmentLayout& layout, size_t max_new, int eos_id);

size_t argmax_last_row(const Tensor& logits);

}  // namespace swie
