#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "rbpn/conv.hpp"
#include "rbpn/tensor.hpp"

// Minimal reverse-mode differentiation over C x H x W tensors. A Var is a
// shared handle to a graph node; ops record their parents and a backward
// closure when any input requires a gradient and recording is enabled.
namespace rbpn::ag {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Direct access for optimizers and tests; never call inside a recorded graph.
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad = Tensor(); }
  bool requires_grad() const { return node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }

  // Identity of the underlying storage; shared parameters compare equal.
  const Node* id() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& node() const noexcept { return node_; }

  static Var from_node(std::shared_ptr<Node> n) {
    Var v;
    v.node_ = std::move(n);
    return v;
  }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

// Seeds root.grad with `seed` (ones when omitted) and propagates to every
// reachable node that requires a gradient.
void backward(const Var& root);
void backward(const Var& root, const Tensor& seed);

Var constant(Tensor t);

Var conv(const kernels::ConvGeometry& g, const Var& x, const Var& weight, const Var& bias);
// Per-channel parametric ReLU; slope holds one value per channel.
Var prelu(const Var& x, const Var& slope);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var concat(std::span<const Var> parts);
// Mean absolute difference, returned as a 1x1x1 tensor.
Var l1_loss(const Var& pred, const Tensor& truth);
// Mean of all elements, 1x1x1.
Var mean(const Var& x);

}  // namespace rbpn::ag
