#include "swie/model.hpp"

#include <algorithm>
#include <cmath>

#include "swie/probe.hpp"

namespace swie {

std::vector<size_t> ModelConfig::middle_three(size_t n_layers) {
  ensure(n_layers >= 1, "ModelConfig: n_layers must be >= 1");
  const int64_t mid = static_cast<int64_t>(n_layers) / 2;
  std::vector<size_t> out;
  for (int64_t cand : {mid - 1, mid, mid + 1}) {
    const int64_t clipped = std::clamp<int64_t>(cand, 0, static_cast<int64_t>(n_layers) - 1);
    const size_t layer = static_cast<size_t>(clipped);
    if (out.empty() || out.back() != layer) out.push_back(layer);
  }
  return out;
}

std::vector<size_t> ModelConfig::resolved_swie_layers() const {
  if (!swie_layers.empty()) {
    std::vector<size_t> out = swie_layers;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  return middle_three(n_layers);
}

bool ModelConfig::is_swie_layer(size_t layer) const {
  const auto layers = resolved_swie_layers();
  return std::find(layers.begin(), layers.end(), layer) != layers.end();
}

void ModelConfig::validate() const {
  ensure(n_layers >= 1, "ModelConfig: n_layers must be >= 1");
  ensure(n_heads >= 1, "ModelConfig: n_heads must be >= 1");
  ensure(model_dim % n_heads == 0, "ModelConfig: model_dim must be divisible by n_heads");
  ensure(ffn_dim >= 1, "ModelConfig: ffn_dim must be >= 1");
  ensure(vocab_size >= 1, "ModelConfig: vocab_size must be >= 1");
  ensure(max_seq_len >= 1, "ModelConfig: max_seq_len must be >= 1");
  ensure(adapter_dim >= 1, "ModelConfig: adapter_dim must be >= 1");
  ensure(layer_norm_eps > 0, "ModelConfig: layer_norm_eps must be positive");
  for (size_t l : swie_layers) {
    ensure(l < n_layers, "ModelConfig: swie layer index out of range");
  }
}

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  const size_t d = config.model_dim, v = config.vocab_size, f = config.ffn_dim;
  const size_t a = config.adapter_dim;
  const real ws = real(0.02);  // weight init stddev

  ModelParams p;
  p.config = config;
  p.tok_embed = Tensor::randn({v, d}, rng, ws, true);
  p.pos_embed = Tensor::randn({config.max_seq_len, d}, rng, ws, true);
  for (size_t l = 0; l < config.n_layers; ++l) {
    LayerParams lp;
    lp.attn_q_w = Tensor::randn({d, d}, rng, ws, true);
    lp.attn_q_b = Tensor::zeros({d}, true);
    lp.attn_k_w = Tensor::randn({d, d}, rng, ws, true);
    lp.attn_k_b = Tensor::zeros({d}, true);
    lp.attn_v_w = Tensor::randn({d, d}, rng, ws, true);
    lp.attn_v_b = Tensor::zeros({d}, true);
    lp.attn_o_w = Tensor::randn({d, d}, rng, ws, true);
    lp.attn_o_b = Tensor::zeros({d}, true);
    lp.ln1_g = Tensor::filled({d}, 1, true);
    lp.ln1_b = Tensor::zeros({d}, true);
    lp.ln2_g = Tensor::filled({d}, 1, true);
    lp.ln2_b = Tensor::zeros({d}, true);
    lp.ff_in_w = Tensor::randn({d, f}, rng, ws, true);
    lp.ff_in_b = Tensor::zeros({f}, true);
    lp.ff_out_w = Tensor::randn({f, d}, rng, ws, true);
    lp.ff_out_b = Tensor::zeros({d}, true);
    if (config.is_swie_layer(l)) {
      AdapterParams ad;
      ad.down_w = Tensor::randn({d, a}, rng, ws, true);
      ad.down_b = Tensor::zeros({a}, true);
      // zero-initialized up-projection: the adapter starts as the zero
      // function and training begins exactly at the baseline model
      ad.up_w = Tensor::zeros({a, d}, true);
      ad.up_b = Tensor::zeros({d}, true);
      lp.adapter = std::move(ad);
    }
    p.layers.push_back(std::move(lp));
  }
  p.final_ln_g = Tensor::filled({d}, 1, true);
  p.final_ln_b = Tensor::zeros({d}, true);
  p.head_w = Tensor::randn({d, v}, rng, ws, true);
  p.head_b = Tensor::zeros({v}, true);
  return p;
}

void ModelParams::for_each_param(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("tok_embed", tok_embed);
  fn("pos_embed", pos_embed);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string pre = "layers." + std::to_string(l) + ".";
    LayerParams& lp = layers[l];
    fn(pre + "attn_q_w", lp.attn_q_w);
    fn(pre + "attn_q_b", lp.attn_q_b);
    fn(pre + "attn_k_w", lp.attn_k_w);
    fn(pre + "attn_k_b", lp.attn_k_b);
    fn(pre + "attn_v_w", lp.attn_v_w);
    fn(pre + "attn_v_b", lp.attn_v_b);
    fn(pre + "attn_o_w", lp.attn_o_w);
    fn(pre + "attn_o_b", lp.attn_o_b);
    fn(pre + "ln1_g", lp.ln1_g);
    fn(pre + "ln1_b", lp.ln1_b);
    fn(pre + "ln2_g", lp.ln2_g);
    fn(pre + "ln2_b", lp.ln2_b);
    fn(pre + "ff_in_w", lp.ff_in_w);
    fn(pre + "ff_in_b", lp.ff_in_b);
    fn(pre + "ff_out_w", lp.ff_out_w);
    fn(pre + "ff_out_b", lp.ff_out_b);
    if (lp.adapter) {
      fn(pre + "adapter.down_w", lp.adapter->down_w);
      fn(pre + "adapter.down_b", lp.adapter->down_b);
      fn(pre + "adapter.up_w", lp.adapter->up_w);
      fn(pre + "adapter.up_b", lp.adapter->up_b);
    }
  }
  fn("final_ln_g", final_ln_g);
  fn("final_ln_b", final_ln_b);
  fn("head_w", head_w);
  fn("head_b", head_b);
}

void ModelParams::for_each_param(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each_param(
      [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

void ModelParams::set_requires_grad(bool rg) {
  for_each_param([rg](const std::string&, Tensor& t) { t.set_requires_grad(rg); });
}

void ModelParams::zero_grad() {
  for_each_param([](const std::string&, Tensor& t) { t.zero_grad(); });
}

Tensor instruction_embedding(const Tensor& hidden, const SegmentLayout& layout, Graph* g) {
  const auto positions = layout.instruction_positions();
  ensure(!positions.empty(), "instruction_embedding: empty instruction span");
  ensure(positions.back() < hidden.rows(),
         "instruction_embedding: instruction span exceeds hidden rows");
  return max_pool_positions(hidden, positions, g);
}

static Tensor adapter_feature(const Tensor& hidden, const SegmentLayout& layout,
                              const AdapterParams& adapter, Graph* g) {
  Tensor pooled = instruction_embedding(hidden, layout, g);
  Tensor down = add_bias_rows(matmul(pooled, adapter.down_w, g), adapter.down_b, g);
  Tensor up = add_bias_rows(matmul(relu(down, g), adapter.up_w, g), adapter.up_b, g);
  return up;  // 1 x d
}

Tensor swie_fuse(const Tensor& hidden, const SegmentLayout& layout,
                 const AdapterParams& adapter, Graph* g) {
  const Tensor feature = adapter_feature(hidden, layout, adapter, g);
  const std::vector<real> weights = segment_weights(layout, hidden.rows());
  return add_scaled_rowvec(hidden, feature, weights, g);
}

Tensor model_forward(const ModelParams& params, std::span<const int> tokens,
                     const SegmentLayout& layout, const ForwardOptions& opts) {
  const ModelConfig& cfg = params.config;
  cfg.validate();
  ensure(!tokens.empty(), "model_forward: no tokens");
  ensure(!(opts.cache && opts.graph), "model_forward: cached passes cannot record gradients");
  ensure(!(opts.cache && opts.trace), "model_forward: tracing requires a full pass");

  const size_t t_new = tokens.size();
  const size_t pos0 = opts.cache ? opts.cache->length : 0;
  const size_t total = pos0 + t_new;
  ensure(total <= cfg.max_seq_len,
         "model_forward: sequence length " + std::to_string(total) + " exceeds maximum " +
             std::to_string(cfg.max_seq_len));
  const bool incremental = opts.cache && pos0 > 0;
  if (!incremental) {
    ensure(layout.size() == t_new, "model_forward: layout does not match token count");
  }
  Graph* g = opts.graph;

  if (opts.trace) {
    opts.trace->n_layers = cfg.n_layers;
    opts.trace->n_heads = cfg.n_heads;
    opts.trace->seq_len = t_new;
    opts.trace->layout = layout;
    opts.trace->probs.assign(cfg.n_layers, {});
  }

  // ramp weights for the rows processed in this pass
  std::vector<real> fuse_w(t_new);
  for (size_t i = 0; i < t_new; ++i) fuse_w[i] = segment_weight_at(layout, pos0 + i);

  Tensor h = add(embed_rows(params.tok_embed, tokens, g),
                 slice_rows(params.pos_embed, pos0, t_new, g), g);

  const size_t hd = cfg.head_dim();
  const real attn_scale = real(1) / std::sqrt(static_cast<real>(hd));
  const BoolMat mask = BoolMat::causal_window(pos0, t_new, total);

  for (size_t l = 0; l < cfg.n_layers; ++l) {
    const LayerParams& lp = params.layers[l];

    Tensor xn = layer_norm(h, lp.ln1_g, lp.ln1_b, cfg.layer_norm_eps, g);
    Tensor q = add_bias_rows(matmul(xn, lp.attn_q_w, g), lp.attn_q_b, g);
    Tensor k = add_bias_rows(matmul(xn, lp.attn_k_w, g), lp.attn_k_b, g);
    Tensor v = add_bias_rows(matmul(xn, lp.attn_v_w, g), lp.attn_v_b, g);

    Tensor k_all = k, v_all = v;
    if (opts.cache) {
      auto& lc = opts.cache->layers[l];
      if (incremental) {
        k_all = concat_rows({lc.keys, k});
        v_all = concat_rows({lc.values, v});
      }
      lc.keys = k_all;
      lc.values = v_all;
    }

    std::vector<Tensor> head_ctx;
    head_ctx.reserve(cfg.n_heads);
    for (size_t head = 0; head < cfg.n_heads; ++head) {
      Tensor qh = slice_cols(q, head * hd, hd, g);
      Tensor kh = slice_cols(k_all, head * hd, hd, g);
      Tensor vh = slice_cols(v_all, head * hd, hd, g);
      Tensor scores = scale(matmul(qh, transpose(kh, g), g), attn_scale, g);
      Tensor probs = masked_softmax_rows(scores, mask, g);
      if (opts.trace) {
        // detached deep copy; capture never feeds back into the pass
        opts.trace->probs[l].push_back(Tensor::from(probs.shape(), probs.values()));
      }
      head_ctx.push_back(matmul(probs, vh, g));
    }
    Tensor ctx = concat_cols(head_ctx, g);
    Tensor attn_out = add_bias_rows(matmul(ctx, lp.attn_o_w, g), lp.attn_o_b, g);
    h = add(h, attn_out, g);

    Tensor yn = layer_norm(h, lp.ln2_g, lp.ln2_b, cfg.layer_norm_eps, g);
    Tensor ff_hidden = relu(add_bias_rows(matmul(yn, lp.ff_in_w, g), lp.ff_in_b, g), g);
    Tensor ff_out = add_bias_rows(matmul(ff_hidden, lp.ff_out_w, g), lp.ff_out_b, g);
    h = add(h, ff_out, g);

    if (cfg.swie_enabled && lp.adapter) {
      if (incremental) {
        const Tensor& feature = opts.cache->layers[l].instruction_feature;
        ensure(feature.defined(),
               "model_forward: cache has no instruction feature for layer " + std::to_string(l));
        h = add_scaled_rowvec(h, feature, fuse_w, g);
      } else {
        Tensor feature = adapter_feature(h, layout, *lp.adapter, g);
        if (opts.cache) opts.cache->layers[l].instruction_feature = feature;
        h = add_scaled_rowvec(h, feature, fuse_w, g);
      }
    }
  }

  Tensor hn = layer_norm(h, params.final_ln_g, params.final_ln_b, cfg.layer_norm_eps, g);
  Tensor logits = add_bias_rows(matmul(hn, params.head_w, g), params.head_b, g);
  if (opts.cache) opts.cache->length = total;
  return logits;
}

size_t argmax_last_row(const Tensor& logits) {
  const size_t t = logits.rows(), v = logits.cols();
  ensure(t >= 1 && v >= 1, "argmax_last_row: empty logits");
  size_t best = 0;
  real bv = logits.at(t - 1, 0);
  for (size_t j = 1; j < v; ++j) {
    if (logits.at(t - 1, j) > bv) {  // ties resolve to the lowest index
      bv = logits.at(t - 1, j);
      best = j;
    }
  }
  return best;
}

std::vector<int> generate(const ModelParams& params, std::span<const int> prompt,
                          const SegmentLayout& layout, size_t max_new, int eos_id) {
  ensure(!prompt.empty(), "generate: empty prompt");
  ensure(prompt.size() <= params.config.max_seq_len, "generate: prompt longer than max length");
  ensure(layout.size() == prompt.size(), "generate: layout does not match prompt");
  if (max_new == 0) return {};

  KVCache cache(params.config);
  ForwardOptions opts;
  opts.cache = &cache;
  Tensor logits = model_forward(params, prompt, layout, opts);

  std::vector<int> out;
  while (true) {
    const int next = static_cast<int>(argmax_last_row(logits));
    out.push_back(next);
    if (next == eos_id || out.size() >= max_new) break;
    if (cache.length >= params.config.max_seq_len) break;
    logits = model_forward(params, std::span<const int>(&next, 1), layout, opts);
  }
  return out;
}

}  // namespace swie
