#include "swie/tensor.hpp"

#include <numeric>

namespace swie {

static size_t shape_numel(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<size_t> shape, bool requires_grad) {
  s_ = std::make_shared<Storage>();
  s_->shape = std::move(shape);
  s_->v.assign(shape_numel(s_->shape), real(0));
  s_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<size_t> shape, bool requires_grad) {
  return Tensor(std::move(shape), requires_grad);
}

Tensor Tensor::filled(std::vector<size_t> shape, real value, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  for (auto& x : t.values()) x = value;
  return t;
}

Tensor Tensor::from(std::vector<size_t> shape, std::vector<real> values, bool requires_grad) {
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = std::move(shape);
  ensure(shape_numel(t.s_->shape) == values.size(),
         "Tensor::from: value count does not match shape");
  t.s_->v = std::move(values);
  t.s_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::randn(std::vector<size_t> shape, Rng& rng, real stddev, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  for (auto& x : t.values()) x = rng.normal(0, stddev);
  return t;
}

const std::vector<size_t>& Tensor::shape() const {
  ensure(defined(), "Tensor: undefined");
  return s_->shape;
}

size_t Tensor::size() const { return defined() ? s_->v.size() : 0; }

size_t Tensor::rows() const {
  const auto& sh = shape();
  return sh.empty() ? 1 : sh[0];
}

size_t Tensor::cols() const {
  const auto& sh = shape();
  return sh.size() >= 2 ? sh[1] : 1;
}

std::vector<real>& Tensor::values() {
  ensure(defined(), "Tensor: undefined");
  return s_->v;
}

const std::vector<real>& Tensor::values() const {
  ensure(defined(), "Tensor: undefined");
  return s_->v;
}

real& Tensor::at(size_t i) { return values()[i]; }
real Tensor::at(size_t i) const { return values()[i]; }

real& Tensor::at(size_t r, size_t c) { return values()[r * cols() + c]; }
real Tensor::at(size_t r, size_t c) const { return values()[r * cols() + c]; }

real Tensor::item() const {
  ensure(size() == 1, "Tensor::item: not a scalar");
  return values()[0];
}

bool Tensor::requires_grad() const { return defined() && s_->requires_grad; }

void Tensor::set_requires_grad(bool rg) {
  ensure(defined(), "Tensor: undefined");
  s_->requires_grad = rg;
}

bool Tensor::has_grad() const { return defined() && !s_->g.empty(); }

std::vector<real>& Tensor::grad() {
  ensure(defined(), "Tensor: undefined");
  ensure(s_->requires_grad, "Tensor::grad: tensor does not require grad");
  if (s_->g.empty()) s_->g.assign(s_->v.size(), real(0));
  return s_->g;
}

const std::vector<real>& Tensor::grad() const {
  ensure(has_grad(), "Tensor::grad: no gradient buffer");
  return s_->g;
}

void Tensor::zero_grad() {
  if (defined()) s_->g.clear();
}

void ensure_finite(const Tensor& t, const char* op) {
  for (size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t.values()[i])) {
      fail(std::string(op) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

void Graph::record(const char* name, std::vector<Tensor> inputs, const Tensor& output,
                   std::function<void()> backward) {
  ensure(output.defined(), "Graph::record: undefined output");
  for (const auto& in : inputs) {
    if (in.same_storage(output)) {
      fail(std::string("Graph::record: cycle, op '") + name + "' writes its own input");
    }
  }
  if (produced_.count(output.storage_id())) {
    fail(std::string("Graph::record: output of '") + name + "' already produced");
  }
  produced_.insert(output.storage_id());
  nodes_.push_back(Node{name, std::move(inputs), output, std::move(backward)});
}

void Graph::backward(const Tensor& loss) {
  ensure(loss.defined() && loss.size() == 1, "Graph::backward: loss must be a scalar");
  ensure(loss.requires_grad(), "Graph::backward: loss does not require grad");
  if (!nodes_.empty() && !produced_.count(loss.storage_id())) {
    fail("Graph::backward: loss was not produced by this graph");
  }
  Tensor seed = loss;  // handle copy, same storage
  seed.grad()[0] += real(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // no gradient flowed here
    it->backward();
  }
}

void Graph::clear() {
  nodes_.clear();
  produced_.clear();
}

}  // namespace swie
