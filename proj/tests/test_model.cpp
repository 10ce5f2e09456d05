#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "rbpn/errors.hpp"
#include "rbpn/model.hpp"
#include "rbpn/projection.hpp"
#include "rbpn/resize.hpp"
#include "support.hpp"

namespace rbpn {
namespace {

namespace fs = std::filesystem;
using testing::random_flow;
using testing::random_inputs;
using testing::random_tensor;
using testing::tiny_config;
using testing::worst_grad_error;

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

TEST(ContextPlan, PastOnly) {
  const ContextPlan p = plan_context(10, 6, TemporalOrder::kP, 0, 20);
  EXPECT_EQ(p.neighbors, (std::vector<int>{9, 8, 7, 6, 5, 4}));
  EXPECT_EQ(p.target, 10);
}

TEST(ContextPlan, PastAndFutureAlternate) {
  const ContextPlan p = plan_context(10, 6, TemporalOrder::kPF, 0, 20);
  EXPECT_EQ(p.neighbors, (std::vector<int>{9, 11, 8, 12, 7, 13}));
  EXPECT_EQ(sorted(p.neighbors), (std::vector<int>{7, 8, 9, 11, 12, 13}));
}

TEST(ContextPlan, RandomIsSeededPermutationOfPast) {
  const ContextPlan p = plan_context(10, 6, TemporalOrder::kP, 0, 20);
  const ContextPlan r0 = plan_context(10, 6, TemporalOrder::kPR, 0, 20);
  EXPECT_EQ(sorted(r0.neighbors), sorted(p.neighbors));
  EXPECT_EQ(plan_context(10, 6, TemporalOrder::kPR, 0, 20).neighbors, r0.neighbors);
  bool any_differs = false;
  for (std::uint64_t seed = 1; seed < 20; ++seed) {
    const ContextPlan r = plan_context(10, 6, TemporalOrder::kPR, seed, 20);
    EXPECT_EQ(sorted(r.neighbors), sorted(p.neighbors));
    any_differs = any_differs || r.neighbors != r0.neighbors;
  }
  EXPECT_TRUE(any_differs);
  const ContextPlan pf = plan_context(10, 6, TemporalOrder::kPF, 0, 20);
  EXPECT_NE(sorted(pf.neighbors), sorted(p.neighbors));
}

TEST(ContextPlan, BoundsAndParity) {
  EXPECT_THROW(plan_context(2, 6, TemporalOrder::kP, 0, 20), RangeError);
  EXPECT_THROW(plan_context(18, 6, TemporalOrder::kPF, 0, 20), RangeError);
  EXPECT_THROW(plan_context(10, 5, TemporalOrder::kPF, 0, 20), ConfigError);
  EXPECT_TRUE(plan_context(0, 0, TemporalOrder::kP, 0, 1).neighbors.empty());
  EXPECT_TRUE(has_full_context(6, 6, TemporalOrder::kP, 7));
  EXPECT_FALSE(has_full_context(5, 6, TemporalOrder::kP, 7));
  EXPECT_TRUE(has_full_context(3, 6, TemporalOrder::kPF, 7));
  EXPECT_FALSE(has_full_context(4, 6, TemporalOrder::kPF, 7));
}

TEST(ContextPlan, ClampedReplicatesEdges) {
  const ClampedPlan c = plan_context_clamped(1, 4, TemporalOrder::kPF, 0, 4);
  EXPECT_EQ(c.plan.neighbors, (std::vector<int>{0, 2, 0, 3}));
  EXPECT_EQ(c.replicated, (std::vector<bool>{false, false, true, false}));
}

class Encoder : public ::testing::Test {
 protected:
  Encoder() : cfg(validate_config(tiny_config(4, 2, 4))), proj(cfg), rng(31) {
    nn::ParamRefs p = proj.params();
    nn::init_he(p, rng);
  }
  ValidatedConfig cfg;
  ProjectionModule proj;
  std::mt19937_64 rng;
};

TEST_F(Encoder, BackProjectionAlgebra) {
  const ag::Var l = ag::constant(random_tensor(Shape{4, 5, 6}, rng));
  const ag::Var m = ag::constant(random_tensor(Shape{4, 5, 6}, rng));
  const EncodeResult r = proj.encode(l, m);
  EXPECT_EQ(r.h.shape(), (Shape{4, 20, 24}));
  Tensor sum = r.h_l.value();
  sum += r.e.value();
  EXPECT_EQ(sum, r.h.value());
  const EncodeResult z = proj.encode(l, m, ResidualMode::kZero);
  EXPECT_EQ(z.h.value(), z.h_l.value());
  EXPECT_EQ(proj.encode(l, m).h.value(), r.h.value());
}

TEST_F(Encoder, DecodeClosesTheLoop) {
  ag::Var l = ag::constant(random_tensor(Shape{4, 3, 3}, rng));
  for (int k = 0; k < 6; ++k) {
    const ag::Var m = ag::constant(random_tensor(Shape{4, 3, 3}, rng));
    l = proj.decode(proj.encode(l, m).h);
    ASSERT_EQ(l.shape(), (Shape{4, 3, 3}));
  }
  EXPECT_THROW(proj.encode(ag::constant(Tensor(Shape{4, 3, 3})), ag::constant(Tensor(Shape{4, 3, 2}))), ShapeError);
  EXPECT_THROW(proj.decode(ag::constant(Tensor(Shape{4, 10, 12}))), ShapeError);
}

TEST_F(Encoder, DecodeGradient) {
  const ag::Var h(random_tensor(Shape{4, 8, 8}, rng, -1.0, 1.0), true);
  const auto loss = [&] { return ag::mean(proj.decode(h)); };
  EXPECT_LT(worst_grad_error(loss, {h}, rng, 24), 1e-3);
}

TEST(Projection, NoDecoderVariant) {
  const ProjectionModule p(validate_config(tiny_config()), false);
  EXPECT_EQ(p.decoder(), nullptr);
  EXPECT_THROW(p.decode(ag::constant(Tensor(Shape{4, 8, 8}))), ConfigError);
}

TEST(Model, OutputShapeAcrossScalesAndContexts) {
  std::mt19937_64 rng(41);
  for (int s : {2, 4, 8}) {
    for (int n : {0, 1, 3}) {
      ModelConfig c = tiny_config(s, n, 3);
      c.order = TemporalOrder::kP;
      const Model m = build_model(validate_config(c), 1);
      const auto in = random_inputs(n, 3, 5, rng);
      const SRResult r = m.forward(in.target, in.neighbors, in.flows);
      EXPECT_EQ(r.sr_frame.shape(), (Shape{3, 3 * s, 5 * s})) << "s=" << s << " n=" << n;
      EXPECT_TRUE(r.sr_frame.all_finite());
    }
  }
}

TEST(Model, ArityAndShapeErrors) {
  const Model m = build_model(validate_config(tiny_config()), 2);
  std::mt19937_64 rng(42);
  auto in = random_inputs(2, 4, 4, rng);
  EXPECT_THROW(m.forward(in.target, std::span(in.neighbors).first(1), in.flows), ArityError);
  EXPECT_THROW(m.forward(in.target, in.neighbors, std::span(in.flows).first(1)), ArityError);
  in.neighbors[1] = random_tensor(Shape{3, 4, 5}, rng);
  EXPECT_THROW(m.forward(in.target, in.neighbors, in.flows), ShapeError);
  in = random_inputs(2, 4, 4, rng);
  in.flows[0] = random_flow(4, 3, rng);
  EXPECT_THROW(m.forward(in.target, in.neighbors, in.flows), ShapeError);
}

TEST(Model, FlowsIgnoredWithoutFlowInput) {
  ModelConfig c = tiny_config();
  c.use_flow = false;
  const Model m = build_model(validate_config(c), 3);
  std::mt19937_64 rng(43);
  const auto in = random_inputs(2, 4, 4, rng);
  EXPECT_EQ(m.forward(in.target, in.neighbors, {}).sr_frame, m.forward(in.target, in.neighbors, in.flows).sr_frame);
}

TEST(Model, WeightsAreSharedAcrossSteps) {
  // The projection weights do not multiply with the context length.
  ModelConfig two = tiny_config(4, 2);
  ModelConfig six = tiny_config(4, 6);
  two.integration = six.integration = Integration::kLast;
  EXPECT_EQ(Model(ModelKind::kRbpn, validate_config(two)).param_count(),
            Model(ModelKind::kRbpn, validate_config(six)).param_count());

  // Each weight tensor appears exactly once, so an update moves every step.
  const Model m = build_model(validate_config(six), 4);
  std::set<const ag::Node*> seen;
  for (const nn::Parameter* p : m.params()) EXPECT_TRUE(seen.insert(p->var.id()).second) << p->name;
}

TEST(Model, StepsSeeIdenticalInputsDeterministically) {
  const Model m = build_model(validate_config(tiny_config(4, 2)), 5);
  std::mt19937_64 rng(45);
  const Frame t = random_tensor(Shape{3, 4, 4}, rng);
  const std::vector<Frame> nbrs{t, t};
  const std::vector<flow::FlowField> flows(2, flow::FlowField(4, 4));
  const SRResult a = m.forward(t, nbrs, flows, true);
  const SRResult b = m.forward(t, nbrs, flows, true);
  ASSERT_EQ(a.per_step_h.size(), 2u);
  EXPECT_EQ(a.per_step_h[0], b.per_step_h[0]);
  EXPECT_EQ(a.sr_frame, b.sr_frame);
  EXPECT_NE(a.per_step_h[0], a.per_step_h[1]);
}

TEST(Model, ZeroWeightsWithResidualGiveBicubic) {
  ModelConfig c = tiny_config(4, 2);
  c.residual_learning = true;
  const Model m(ModelKind::kRbpn, validate_config(c));
  std::mt19937_64 rng(46);
  const auto in = random_inputs(2, 5, 4, rng);
  EXPECT_EQ(m.forward(in.target, in.neighbors, in.flows).sr_frame, bicubic_resize(in.target, 4.0));
}

TEST(Model, ConcatEqualsLastForSingleNeighbor) {
  ModelConfig c = tiny_config(4, 1);
  Model concat = build_model(validate_config(c), 6);
  c.integration = Integration::kLast;
  Model last(ModelKind::kRbpn, validate_config(c));
  ASSERT_EQ(concat.params().size(), last.params().size());
  for (std::size_t i = 0; i < concat.params().size(); ++i) {
    last.params()[i]->var.mutable_value() = concat.params()[i]->var.value();
  }
  std::mt19937_64 rng(47);
  const auto in = random_inputs(1, 4, 4, rng);
  EXPECT_EQ(concat.forward(in.target, in.neighbors, in.flows).sr_frame,
            last.forward(in.target, in.neighbors, in.flows).sr_frame);
}

TEST(Model, GradientsReachSisrThroughTheChain) {
  const Model m = build_model(validate_config(tiny_config(4, 2)), 7);
  std::mt19937_64 rng(48);
  const auto in = random_inputs(2, 4, 4, rng);
  for (nn::Parameter* p : m.params()) p->var.zero_grad();
  ag::backward(ag::l1_loss(m.forward_graph(in.target, in.neighbors, in.flows).sr, random_tensor(Shape{3, 16, 16}, rng)));
  int sisr_with_grad = 0;
  for (const nn::Parameter* p : m.params()) {
    ASSERT_TRUE(p->var.has_grad()) << p->name;
    if (p->name.rfind("sisr", 0) == 0) {
      double norm = 0.0;
      for (double g : p->var.grad().values()) norm += g * g;
      sisr_with_grad += norm > 0.0;
    }
  }
  EXPECT_GT(sisr_with_grad, 0);
}

TEST(Model, NoContextFallsBackToSisr) {
  const Model m = build_model(validate_config(tiny_config(4, 0)), 8);
  EXPECT_EQ(m.projection(), nullptr);
  std::mt19937_64 rng(49);
  const Frame t = random_tensor(Shape{3, 6, 5}, rng);
  EXPECT_EQ(m.forward(t, {}, {}).sr_frame.shape(), (Shape{3, 24, 20}));
}

TEST(Model, BaselinesStructure) {
  const ValidatedConfig v = validate_config(tiny_config(4, 2));
  const Model rbpn(ModelKind::kRbpn, v);
  const Model misr(ModelKind::kRbpnMisr, v);
  const Model sisr(ModelKind::kDbpnSisr, v);
  const Model dmisr(ModelKind::kDbpnMisr, v);
  EXPECT_LT(misr.param_count(), rbpn.param_count());
  EXPECT_NE(rbpn.projection()->decoder(), nullptr);
  EXPECT_EQ(misr.projection()->decoder(), nullptr);
  std::mt19937_64 rng(50);
  const auto in = random_inputs(2, 4, 6, rng);
  const Shape want{3, 16, 24};
  EXPECT_EQ(build_baseline(ModelKind::kDbpnSisr, v, 1).forward(in.target, in.neighbors, {}).sr_frame.shape(), want);
  EXPECT_EQ(build_baseline(ModelKind::kDbpnMisr, v, 1).forward(in.target, in.neighbors, in.flows).sr_frame.shape(),
            want);
  EXPECT_EQ(build_baseline(ModelKind::kRbpnMisr, v, 1).forward(in.target, in.neighbors, in.flows).sr_frame.shape(),
            want);
  EXPECT_EQ(parse_model_kind("rbpn_misr"), ModelKind::kRbpnMisr);
  EXPECT_THROW(parse_model_kind("FRVSR"), ConfigError);
}

TEST(Model, SaveLoadRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "rbpn_test_model_io";
  fs::remove_all(dir);
  ModelConfig c = tiny_config(2, 2);
  c.order = TemporalOrder::kPR;
  const Model m = build_model(validate_config(c), 9);
  m.save(dir);
  const Model back = Model::load(dir);
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(back.kind(), m.kind());
  std::mt19937_64 rng(51);
  const auto in = random_inputs(2, 4, 4, rng);
  const Frame a = m.forward(in.target, in.neighbors, in.flows).sr_frame;
  const Frame b = back.forward(in.target, in.neighbors, in.flows).sr_frame;
  // Weights are archived as float32.
  EXPECT_LT(max_abs_diff(a, b), 1e-5);
  EXPECT_EQ(back.forward(in.target, in.neighbors, in.flows).sr_frame, b);
  fs::remove_all(dir);
  EXPECT_THROW(Model::load(dir), IoError);
}

TEST(Model, FullSizeAccounting) {
  const Model m(ModelKind::kRbpn, validate_config(ModelConfig{}));
  EXPECT_NEAR(static_cast<double>(m.param_count()), 12771e3, 0.10 * 12771e3);
  std::int64_t params = 0;
  std::int64_t flops = 0;
  for (const SubnetReport& r : m.report(120, 160)) {
    params += r.params;
    flops += r.flops_per_call * r.calls;
  }
  EXPECT_EQ(params, m.param_count());
  EXPECT_EQ(flops, m.estimate_flops(120, 160));
}

}  // namespace
}  // namespace rbpn
