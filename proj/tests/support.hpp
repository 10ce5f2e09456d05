#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rbpn/flow.hpp"
#include "rbpn/model.hpp"

namespace rbpn::testing {

// Narrow network used by the fast structural tests.
inline ModelConfig tiny_config(int scale = 4, int n = 2, int channels = 4) {
  ModelConfig c;
  c.scale = scale;
  c.context_n = n;
  c.c_l = channels;
  c.c_m = channels;
  c.c_h = channels;
  c.sisr_stages = 2;
  c.resnet_blocks = 1;
  c.order = n % 2 == 0 ? TemporalOrder::kPF : TemporalOrder::kP;
  return c;
}

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(s);
  for (double& v : t.values()) v = d(rng);
  return t;
}

inline flow::FlowField random_flow(int h, int w, std::mt19937_64& rng, float mag = 3.0f) {
  std::uniform_real_distribution<float> d(-mag, mag);
  flow::FlowField f(h, w);
  for (float& v : f.interleaved()) v = d(rng);
  return f;
}

struct Inputs {
  Frame target;
  std::vector<Frame> neighbors;
  std::vector<flow::FlowField> flows;
};

inline Inputs random_inputs(int n, int h, int w, std::mt19937_64& rng) {
  Inputs in{random_tensor(Shape{3, h, w}, rng), {}, {}};
  for (int i = 0; i < n; ++i) {
    in.neighbors.push_back(random_tensor(Shape{3, h, w}, rng));
    in.flows.push_back(random_flow(h, w, rng));
  }
  return in;
}

// Worst relative error between the analytic gradient of `loss` and central
// differences, over up to `per_tensor` entries of each tensor in `vars`.
// `loss` must rebuild the graph from the current values on every call.
inline double worst_grad_error(const std::function<ag::Var()>& loss, const std::vector<ag::Var>& vars,
                               std::mt19937_64& rng, int per_tensor = 8, double h = 1e-6) {
  for (ag::Var v : vars) v.zero_grad();
  ag::backward(loss());
  double worst = 0.0;
  for (ag::Var v : vars) {
    if (!v.has_grad()) return INFINITY;
    const Tensor analytic = v.grad();
    Tensor& w = v.mutable_value();
    std::uniform_int_distribution<std::size_t> pick(0, w.numel() - 1);
    const bool all = w.numel() <= static_cast<std::size_t>(per_tensor);
    const std::size_t count = all ? w.numel() : static_cast<std::size_t>(per_tensor);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = all ? i : pick(rng);
      const double saved = w[j];
      const auto eval = [&](double x) {
        w[j] = x;
        ag::NoGradGuard g;
        return loss().value()[0];
      };
      // A step can straddle an L1 or PReLU kink; score the better of two step sizes.
      double best = INFINITY;
      for (const double step : {h, h / 10.0}) {
        const double fd = (eval(saved + step) - eval(saved - step)) / (2.0 * step);
        best = std::min(best, std::abs(analytic[j] - fd) / std::max({std::abs(analytic[j]), std::abs(fd), 1e-6}));
      }
      w[j] = saved;
      worst = std::max(worst, best);
    }
  }
  return worst;
}

}  // namespace rbpn::testing
