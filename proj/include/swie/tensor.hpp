#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "swie/common.hpp"

namespace swie {

class Rng;

// Dense row-major tensor with shared storage. Copies alias the same buffer,
// which is what lets the graph hold references to op inputs and outputs.
// Values are double precision by default (see SWIE_SINGLE_PRECISION).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape, bool requires_grad = false);

  static Tensor zeros(std::vector<size_t> shape, bool requires_grad = false);
  static Tensor filled(std::vector<size_t> shape, real value, bool requires_grad = false);
  static Tensor from(std::vector<size_t> shape, std::vector<real> values,
                     bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);
  static Tensor randn(std::vector<size_t> shape, Rng& rng, real stddev,
                      bool requires_grad = false);

  bool defined() const { return s_ != nullptr; }
  const std::vector<size_t>& shape() const;
  size_t size() const;
  size_t rows() const;  // first dimension
  size_t cols() const;  // second dimension (1 for vectors)

  std::vector<real>& values();
  const std::vector<real>& values() const;
  real& at(size_t i);
  real at(size_t i) const;
  real& at(size_t r, size_t c);
  real at(size_t r, size_t c) const;
  real item() const;  // scalar tensors only

  bool requires_grad() const;
  void set_requires_grad(bool rg);
  bool has_grad() const;
  // Gradient buffer, allocated zeroed on first access. Only meaningful for
  // tensors with requires_grad set.
  std::vector<real>& grad();
  const std::vector<real>& grad() const;
  void zero_grad();

  bool same_storage(const Tensor& other) const { return s_ == other.s_; }
  const void* storage_id() const { return s_.get(); }

 private:
  struct Storage {
    std::vector<size_t> shape;
    std::vector<real> v;
    std::vector<real> g;  // empty until first gradient write
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

// throws if any value is NaN/Inf; op kernels call this on their outputs
void ensure_finite(const Tensor& t, const char* op);

// Reverse-mode tape. Ops append themselves in execution order, which is a
// topological order by construction; backward() replays it in reverse and
// visits every recorded op exactly once. One live graph per training step,
// single-threaded.
class Graph {
 public:
  struct Node {
    const char* name;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(const char* name, std::vector<Tensor> inputs, const Tensor& output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and propagates through the tape. The loss must
  // be a scalar produced by this graph (or a leaf, in which case there is
  // nothing to do).
  void backward(const Tensor& loss);

  size_t num_ops() const { return nodes_.size(); }
  void clear();

 private:
  std::vector<Node> nodes_;
  std::unordered_set<const void*> produced_;
};

}  // namespace swie
