#include "rbpn/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "rbpn/errors.hpp"

namespace rbpn::ag {

namespace {
thread_local bool t_grad_enabled = true;

bool any_requires_grad(std::initializer_list<const Var*> vars) {
  for (const Var* v : vars) {
    if (v->defined() && v->requires_grad()) return true;
  }
  return false;
}

std::shared_ptr<Node> make_result(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

}  // namespace

void Node::accumulate(const Tensor& g) {
  if (grad.empty()) {
    grad = g;
  } else {
    grad += g;
  }
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() noexcept { return t_grad_enabled; }

void backward(const Var& root) { backward(root, Tensor(root.shape(), 1.0)); }

void backward(const Var& root, const Tensor& seed) {
  if (!root.defined() || !root.requires_grad()) return;
  if (seed.shape() != root.shape()) throw ShapeError("backward seed shape mismatch");

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<const Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Var constant(Tensor t) { return Var(std::move(t), false); }

Var conv(const kernels::ConvGeometry& g, const Var& x, const Var& weight, const Var& bias) {
  Tensor y = kernels::conv_forward(g, x.value(), weight.value().values(),
                                   bias.defined() ? bias.value().values() : std::span<const double>{});
  auto out = make_result(std::move(y));
  if (grad_enabled() && any_requires_grad({&x, &weight, &bias})) {
    out->requires_grad = true;
    out->parents = {x.node(), weight.node()};
    if (bias.defined()) out->parents.push_back(bias.node());
    out->backward = [g](Node& self) {
      Node& xn = *self.parents[0];
      Node& wn = *self.parents[1];
      Node* bn = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
      Tensor dx;
      Tensor dw;
      Tensor db;
      if (wn.requires_grad) dw = Tensor(wn.value.shape());
      if (bn != nullptr && bn->requires_grad) db = Tensor(bn->value.shape());
      kernels::conv_backward(g, xn.value, wn.value.values(), self.grad, xn.requires_grad ? &dx : nullptr,
                             dw.values(), db.values());
      if (xn.requires_grad) xn.accumulate(dx);
      if (wn.requires_grad) wn.accumulate(dw);
      if (bn != nullptr && bn->requires_grad) bn->accumulate(db);
    };
  }
  return Var::from_node(std::move(out));
}

Var prelu(const Var& x, const Var& slope) {
  const Tensor& xv = x.value();
  const Tensor& a = slope.value();
  if (a.numel() != static_cast<std::size_t>(xv.channels())) {
    throw ShapeError("prelu slope count " + std::to_string(a.numel()) + " != channels of " + to_string(xv.shape()));
  }
  Tensor y(xv.shape());
  const std::size_t plane = xv.shape().plane();
  for (int c = 0; c < xv.channels(); ++c) {
    const double* src = xv.data() + c * plane;
    double* dst = y.data() + c * plane;
    const double ac = a[c];
    for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] > 0.0 ? src[i] : ac * src[i];
  }
  auto out = make_result(std::move(y));
  if (grad_enabled() && any_requires_grad({&x, &slope})) {
    out->requires_grad = true;
    out->parents = {x.node(), slope.node()};
    out->backward = [](Node& self) {
      Node& xn = *self.parents[0];
      Node& an = *self.parents[1];
      const Tensor& xv = xn.value;
      const std::size_t plane = xv.shape().plane();
      Tensor dx;
      Tensor da;
      if (xn.requires_grad) dx = Tensor(xv.shape());
      if (an.requires_grad) da = Tensor(an.value.shape());
      for (int c = 0; c < xv.channels(); ++c) {
        const double* src = xv.data() + c * plane;
        const double* g = self.grad.data() + c * plane;
        const double ac = an.value[c];
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          const bool pos = src[i] > 0.0;
          if (xn.requires_grad) dx.data()[c * plane + i] = pos ? g[i] : ac * g[i];
          if (!pos) acc += g[i] * src[i];
        }
        if (an.requires_grad) da[c] = acc;
      }
      if (xn.requires_grad) xn.accumulate(dx);
      if (an.requires_grad) an.accumulate(da);
    };
  }
  return Var::from_node(std::move(out));
}

namespace {
Var add_or_sub(const Var& a, const Var& b, double sign) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(sign > 0 ? "add" : "sub") + ": " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  Tensor y = a.value();
  if (sign > 0) {
    y += b.value();
  } else {
    y -= b.value();
  }
  auto out = make_result(std::move(y));
  if (grad_enabled() && any_requires_grad({&a, &b})) {
    out->requires_grad = true;
    out->parents = {a.node(), b.node()};
    out->backward = [sign](Node& self) {
      Node& an = *self.parents[0];
      Node& bn = *self.parents[1];
      if (an.requires_grad) an.accumulate(self.grad);
      if (bn.requires_grad) {
        if (sign > 0) {
          bn.accumulate(self.grad);
        } else {
          Tensor neg = self.grad;
          neg *= -1.0;
          bn.accumulate(neg);
        }
      }
    };
  }
  return Var::from_node(std::move(out));
}
}  // namespace

Var add(const Var& a, const Var& b) { return add_or_sub(a, b, 1.0); }
Var sub(const Var& a, const Var& b) { return add_or_sub(a, b, -1.0); }

Var concat(std::span<const Var> parts) {
  if (parts.size() == 1) return parts.front();
  std::vector<Tensor> values;
  values.reserve(parts.size());
  bool needs_grad = false;
  for (const Var& p : parts) {
    values.push_back(p.value());
    needs_grad = needs_grad || p.requires_grad();
  }
  auto out = make_result(concat_channels(values));
  if (grad_enabled() && needs_grad) {
    out->requires_grad = true;
    for (const Var& p : parts) out->parents.push_back(p.node());
    out->backward = [](Node& self) {
      int begin = 0;
      for (auto& p : self.parents) {
        const int c = p->value.channels();
        if (p->requires_grad) p->accumulate(slice_channels(self.grad, begin, c));
        begin += c;
      }
    };
  }
  return Var::from_node(std::move(out));
}

Var l1_loss(const Var& pred, const Tensor& truth) {
  if (pred.shape() != truth.shape()) {
    throw ShapeError("l1_loss: " + to_string(pred.shape()) + " vs " + to_string(truth.shape()));
  }
  const Tensor& p = pred.value();
  const std::size_t n = p.numel();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(p[i] - truth[i]);
  auto out = make_result(Tensor(Shape{1, 1, 1}, s / static_cast<double>(n)));
  if (grad_enabled() && pred.requires_grad()) {
    out->requires_grad = true;
    out->parents = {pred.node()};
    out->backward = [truth](Node& self) {
      Node& pn = *self.parents[0];
      const std::size_t n = pn.value.numel();
      const double scale = self.grad[0] / static_cast<double>(n);
      Tensor d(pn.value.shape());
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = pn.value[i] - truth[i];
        d[i] = diff > 0.0 ? scale : (diff < 0.0 ? -scale : 0.0);
      }
      pn.accumulate(d);
    };
  }
  return Var::from_node(std::move(out));
}

Var mean(const Var& x) {
  const Tensor& v = x.value();
  double s = 0.0;
  for (double e : v.values()) s += e;
  auto out = make_result(Tensor(Shape{1, 1, 1}, s / static_cast<double>(v.numel())));
  if (grad_enabled() && x.requires_grad()) {
    out->requires_grad = true;
    out->parents = {x.node()};
    out->backward = [](Node& self) {
      Node& xn = *self.parents[0];
      xn.accumulate(Tensor(xn.value.shape(), self.grad[0] / static_cast<double>(xn.value.numel())));
    };
  }
  return Var::from_node(std::move(out));
}

}  // namespace rbpn::ag
