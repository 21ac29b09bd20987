#pragma once

#include <span>
#include <vector>

#include "swie/tensor.hpp"

namespace swie {

// Row/column boolean mask; mask.at(i, j) true means column j is visible to
// row i.
struct BoolMat {
  size_t rows = 0, cols = 0;
  std::vector<uint8_t> v;

  BoolMat() = default;
  BoolMat(size_t r, size_t c, bool value = false)
      : rows(r), cols(c), v(r * c, value ? 1 : 0) {}
  bool at(size_t r, size_t c) const { return v[r * cols + c] != 0; }
  void set(size_t r, size_t c, bool value) { v[r * cols + c] = value ? 1 : 0; }

  // square causal mask: row i sees columns j <= i
  static BoolMat causal(size_t t);
  // rows are queries at absolute positions row_offset..row_offset+rows-1
  // against cols keys at absolute positions 0..cols-1
  static BoolMat causal_window(size_t row_offset, size_t rows, size_t cols);
};

// All kernels are pure functions of their inputs. If `g` is non-null and any
// input requires grad, the op is recorded on the tape with its backward rule.
// Every kernel checks its output for NaN/Inf and throws on violation.

Tensor matmul(const Tensor& a, const Tensor& b, Graph* g = nullptr);
Tensor transpose(const Tensor& a, Graph* g = nullptr);
Tensor add(const Tensor& a, const Tensor& b, Graph* g = nullptr);
Tensor scale(const Tensor& a, real c, Graph* g = nullptr);
// x[t x d] + bias[d] broadcast over rows
Tensor add_bias_rows(const Tensor& x, const Tensor& bias, Graph* g = nullptr);
Tensor relu(const Tensor& x, Graph* g = nullptr);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, real eps,
                  Graph* g = nullptr);
// row-stochastic over visible entries, masked entries exactly 0; stabilized
// by per-row max subtraction; a fully-masked row is an error
Tensor masked_softmax_rows(const Tensor& scores, const BoolMat& mask, Graph* g = nullptr);
// per-dimension max over the selected rows; gradient routes to the first
// (lowest-index) argmax row on ties; returns [1 x d]
Tensor max_pool_positions(const Tensor& h, std::span<const size_t> positions,
                          Graph* g = nullptr);
// mean negative log-likelihood over unmasked positions (scalar)
Tensor cross_entropy_mle(const Tensor& logits, std::span<const int> targets,
                         const std::vector<uint8_t>& loss_mask, Graph* g = nullptr);
// gather rows of an embedding table by token id; repeated ids accumulate in
// the backward scatter
Tensor embed_rows(const Tensor& table, std::span<const int> ids, Graph* g = nullptr);
Tensor slice_rows(const Tensor& x, size_t first, size_t count, Graph* g = nullptr);
Tensor slice_cols(const Tensor& x, size_t first, size_t count, Graph* g = nullptr);
Tensor concat_cols(const std::vector<Tensor>& parts, Graph* g = nullptr);
Tensor concat_rows(const std::vector<Tensor>& parts, Graph* g = nullptr);
// out[i] = x[i] + w[i] * vec  (vec is [1 x d] or [d]; w has one entry per row)
Tensor add_scaled_rowvec(const Tensor& x, const Tensor& vec, std::span<const real> w,
                         Graph* g = nullptr);
// weighted sum of scalar tensors (weights are constants)
Tensor scalar_weighted_sum(const std::vector<Tensor>& xs, std::span<const real> w,
                           Graph* g = nullptr);

}  // namespace swie
