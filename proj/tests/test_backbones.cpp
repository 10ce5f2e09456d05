#include <gtest/gtest.h>

#include <random>

#include "rbpn/backbones.hpp"
#include "rbpn/conv.hpp"
#include "rbpn/errors.hpp"
#include "support.hpp"

namespace rbpn {
namespace {

using testing::random_tensor;
using testing::tiny_config;
using testing::worst_grad_error;

std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 0.3);
  std::vector<double> w(n);
  for (double& v : w) v = d(rng);
  return w;
}

Tensor naive_conv(const kernels::ConvGeometry& g, const Tensor& x, const std::vector<double>& w,
                  const std::vector<double>& b) {
  const Shape os = g.output_shape(x.shape());
  Tensor y(os);
  const int k = g.kernel;
  for (int o = 0; o < g.out_ch; ++o) {
    for (int yy = 0; yy < os.h; ++yy) {
      for (int xx = 0; xx < os.w; ++xx) y.at(o, yy, xx) = b[static_cast<std::size_t>(o)];
    }
  }
  if (!g.transposed) {
    for (int o = 0; o < g.out_ch; ++o) {
      for (int yy = 0; yy < os.h; ++yy) {
        for (int xx = 0; xx < os.w; ++xx) {
          double acc = 0.0;
          for (int i = 0; i < g.in_ch; ++i) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const int sy = yy * g.stride - g.pad + ky;
                const int sx = xx * g.stride - g.pad + kx;
                if (sy < 0 || sx < 0 || sy >= x.height() || sx >= x.width()) continue;
                acc += x.at(i, sy, sx) * w[((static_cast<std::size_t>(o) * g.in_ch + i) * k + ky) * k + kx];
              }
            }
          }
          y.at(o, yy, xx) += acc;
        }
      }
    }
    return y;
  }
  for (int i = 0; i < g.in_ch; ++i) {
    for (int sy = 0; sy < x.height(); ++sy) {
      for (int sx = 0; sx < x.width(); ++sx) {
        for (int o = 0; o < g.out_ch; ++o) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int yy = sy * g.stride - g.pad + ky;
              const int xx = sx * g.stride - g.pad + kx;
              if (yy < 0 || xx < 0 || yy >= os.h || xx >= os.w) continue;
              y.at(o, yy, xx) += x.at(i, sy, sx) * w[((static_cast<std::size_t>(i) * g.out_ch + o) * k + ky) * k + kx];
            }
          }
        }
      }
    }
  }
  return y;
}

struct ConvCase {
  kernels::ConvGeometry g;
  int h;
  int w;
};

class ConvKernel : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvKernel, MatchesDirectLoops) {
  const ConvCase& c = GetParam();
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor(Shape{c.g.in_ch, c.h, c.w}, rng, -1.0, 1.0);
  const auto w = random_weights(c.g.weight_count(), rng);
  const auto b = random_weights(static_cast<std::size_t>(c.g.out_ch), rng);
  const Tensor fast = kernels::conv_forward(c.g, x, w, b);
  const Tensor slow = naive_conv(c.g, x, w, b);
  ASSERT_EQ(fast.shape(), slow.shape());
  EXPECT_LT(max_abs_diff(fast, slow), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Geometries, ConvKernel,
                         ::testing::Values(ConvCase{{3, 5, 3, 1, 1, false}, 7, 6}, ConvCase{{4, 2, 1, 1, 0, false}, 5, 5},
                                           ConvCase{{2, 3, 8, 4, 2, false}, 16, 12},
                                           ConvCase{{2, 3, 8, 4, 2, true}, 4, 3},
                                           ConvCase{{3, 2, 6, 2, 2, true}, 3, 5},
                                           ConvCase{{2, 2, 12, 8, 2, true}, 2, 2}));

TEST(ConvKernel, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (const bool transposed : {false, true}) {
    const kernels::ConvGeometry g{2, 3, transposed ? 6 : 3, transposed ? 2 : 1, transposed ? 2 : 1, transposed};
    const ag::Var x(random_tensor(Shape{2, 5, 4}, rng, -1.0, 1.0), true);
    const ag::Var w(Tensor(Shape{1, 1, static_cast<int>(g.weight_count())}, random_weights(g.weight_count(), rng)), true);
    const ag::Var b(Tensor(Shape{1, 1, 3}, random_weights(3, rng)), true);
    const Tensor truth = random_tensor(g.output_shape(x.shape()), rng);
    const auto loss = [&] { return ag::l1_loss(ag::conv(g, x, w, b), truth); };
    EXPECT_LT(worst_grad_error(loss, {x, w, b}, rng, 12), 1e-4) << (transposed ? "transposed" : "regular");
  }
}

TEST(Layers, SingleConvCounts) {
  nn::ConvLayer conv("c", {64, 64, 3, 1, 1, false}, false);
  nn::ParamRefs p;
  conv.collect(p);
  EXPECT_EQ(nn::count_params(p), 36928);
  EXPECT_EQ(conv.flops(Shape{64, 64, 64}), 2LL * 9 * 64 * 64 * 64 * 64);
}

TEST(Layers, UpProjectionUnitCount) {
  nn::UpProjection up("up", 64, resample_spec(ScaleFactor(4)));
  nn::ParamRefs p;
  up.collect(p);
  std::int64_t conv_params = 0;
  for (const nn::Parameter* q : p) {
    if (q->role != nn::ParamRole::kSlope) conv_params += static_cast<std::int64_t>(q->numel());
  }
  EXPECT_EQ(conv_params, 786624);
  EXPECT_EQ(up.output_shape(Shape{64, 16, 16}), (Shape{64, 64, 64}));
}

TEST(Layers, HeInitStatistics) {
  nn::ConvLayer conv("c", {32, 32, 3, 1, 1, false}, true);
  nn::ParamRefs p;
  conv.collect(p);
  std::mt19937_64 rng(9);
  nn::init_he(p, rng);
  for (const nn::Parameter* q : p) {
    const auto v = q->var.value().values();
    if (q->role == nn::ParamRole::kWeight) {
      double ss = 0.0;
      for (double x : v) ss += x * x;
      EXPECT_NEAR(std::sqrt(ss / static_cast<double>(v.size())), std::sqrt(2.0 / (32 * 9)), 0.005);
    } else if (q->role == nn::ParamRole::kBias) {
      for (double x : v) EXPECT_EQ(x, 0.0);
    } else {
      for (double x : v) EXPECT_EQ(x, 0.25);
    }
  }
}

TEST(Backbones, FeatureExtractorChannels) {
  ModelConfig c;
  const auto fx = nn::build_feature_extractors(validate_config(c));
  EXPECT_EQ(fx.feat_m.in_channels(), 8);
  EXPECT_EQ(fx.feat_l.out_shape(Shape{3, 64, 112}), (Shape{256, 64, 112}));
  c.use_flow = false;
  EXPECT_EQ(nn::build_feature_extractors(validate_config(c)).feat_m.in_channels(), 6);
}

TEST(Backbones, DeclaredContractsAtFullWidth) {
  const ValidatedConfig v = validate_config(ModelConfig{});
  EXPECT_EQ(nn::build_sisr(v).out_shape(Shape{256, 16, 16}), (Shape{64, 64, 64}));
  EXPECT_EQ(nn::build_misr(v).out_shape(Shape{256, 16, 16}), (Shape{64, 64, 64}));
  EXPECT_EQ(nn::build_decoder(v).out_shape(Shape{64, 64, 64}), (Shape{256, 16, 16}));
  EXPECT_EQ(nn::build_res(v).out_shape(Shape{64, 64, 64}), (Shape{64, 64, 64}));
  const nn::Subnet rec = nn::build_reconstruction(v);
  EXPECT_EQ(rec.in_channels(), 384);
  EXPECT_EQ(rec.param_count(), 10371);
  ModelConfig last;
  last.integration = Integration::kLast;
  EXPECT_EQ(nn::build_reconstruction(validate_config(last)).in_channels(), 64);
}

TEST(Backbones, DeeperSisrHasMoreParams) {
  const nn::Subnet base = nn::build_sisr(validate_config(ModelConfig{}));
  const nn::Subnet large = nn::build_sisr(validate_config(ModelConfig::with_variant(SizeVariant::kL)));
  EXPECT_GT(large.param_count(), base.param_count());
  EXPECT_EQ(large.out_shape(Shape{256, 16, 16}), base.out_shape(Shape{256, 16, 16}));
}

// Every subnet honours its shape contract on random sizes and scales.
TEST(Backbones, ShapeContractsOnRandomSizes) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> side(2, 7);
  for (int s : {2, 4, 8}) {
    ModelConfig c = tiny_config(s, 2, 3);
    c.c_l = 4;
    const ValidatedConfig v = validate_config(c);
    std::mt19937_64 init(s);
    for (int trial = 0; trial < 2; ++trial) {
      const int h = side(rng);
      const int w = side(rng);
      const auto check = [&](const nn::Subnet& net, Shape in) {
        nn::ParamRefs p = net.params();
        nn::init_he(p, init);
        const ag::Var y = net.forward(ag::constant(random_tensor(in, rng)));
        EXPECT_EQ(y.shape(), net.out_shape(in)) << net.name() << " s=" << s;
        EXPECT_TRUE(y.value().all_finite());
      };
      const auto fx = nn::build_feature_extractors(v);
      check(fx.feat_l, Shape{3, h, w});
      check(fx.feat_m, Shape{8, h, w});
      check(nn::build_sisr(v), Shape{4, h, w});
      check(nn::build_misr(v), Shape{3, h, w});
      check(nn::build_res(v), Shape{3, s * h, s * w});
      check(nn::build_decoder(v), Shape{3, s * h, s * w});
      check(nn::build_reconstruction(v), Shape{6, s * h, s * w});
    }
  }
}

TEST(Backbones, RejectsWrongInputChannels) {
  const nn::Subnet sisr = nn::build_sisr(validate_config(tiny_config()));
  EXPECT_THROW(sisr.forward(ag::constant(Tensor(Shape{5, 4, 4}))), ShapeError);
}

TEST(Backbones, SubnetGradientsMatchFiniteDifferences) {
  const ValidatedConfig v = validate_config(tiny_config(4, 2, 4));
  std::mt19937_64 rng(12);
  std::vector<nn::Subnet> nets;
  nets.push_back(nn::build_sisr(v));
  nets.push_back(nn::build_misr(v));
  nets.push_back(nn::build_res(v));
  nets.push_back(nn::build_decoder(v));
  for (const nn::Subnet& net : nets) {
    nn::ParamRefs p = net.params();
    nn::init_he(p, rng);
    const Shape in = net.name() == "res" || net.name() == "dec" ? Shape{4, 8, 8} : Shape{4, 2, 2};
    const ag::Var x(random_tensor(in, rng, -1.0, 1.0), true);
    const Tensor truth = random_tensor(net.out_shape(in), rng);
    std::vector<ag::Var> vars{x};
    for (nn::Parameter* q : p) vars.push_back(q->var);
    const auto loss = [&] { return ag::l1_loss(net.forward(x), truth); };
    EXPECT_LT(worst_grad_error(loss, vars, rng, 4), 1e-3) << net.name();
  }
}

}  // namespace
}  // namespace rbpn
