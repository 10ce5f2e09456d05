#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rbpn/conv.hpp"
#include "rbpn/metrics.hpp"
#include "rbpn/model.hpp"
#include "rbpn/resize.hpp"

namespace {

rbpn::Tensor noise(rbpn::Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  rbpn::Tensor t(s);
  for (double& v : t.values()) v = d(rng);
  return t;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.05);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// 3x3, 64 -> 64 channels on an LR-sized tile.
void BM_Conv3x3(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const rbpn::kernels::ConvGeometry g{64, 64, 3, 1, 1, false};
  const rbpn::Tensor x = noise(rbpn::Shape{64, side, side}, 1);
  const auto w = noise(g.weight_count(), 2);
  const std::vector<double> b(64, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(rbpn::kernels::conv_forward(g, x, w, b));
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * 9 * 64 * 64 * side * side, benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

// 8x8 stride-4 transposed convolution, the x4 up-projection kernel.
void BM_Deconv8x8(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const rbpn::kernels::ConvGeometry g{32, 32, 8, 4, 2, true};
  const rbpn::Tensor x = noise(rbpn::Shape{32, side, side}, 3);
  const auto w = noise(g.weight_count(), 4);
  const std::vector<double> b(32, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(rbpn::kernels::conv_forward(g, x, w, b));
}
BENCHMARK(BM_Deconv8x8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BicubicDown4(benchmark::State& state) {
  const rbpn::Tensor hr = noise(rbpn::Shape{3, 256, 448}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(rbpn::bicubic_resize(hr, 64, 112, 0.25));
}
BENCHMARK(BM_BicubicDown4)->Unit(benchmark::kMillisecond);

void BM_PsnrSsimY(benchmark::State& state) {
  const rbpn::Tensor a = noise(rbpn::Shape{3, 480, 704}, 6);
  const rbpn::Tensor b = noise(rbpn::Shape{3, 480, 704}, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rbpn::psnr_y(a, b, 8));
    benchmark::DoNotOptimize(rbpn::ssim_y(a, b, 8));
  }
}
BENCHMARK(BM_PsnrSsimY)->Unit(benchmark::kMillisecond);

// Whole narrow-model forward on a 32x32 LR frame with two neighbors.
void BM_TinyForward(benchmark::State& state) {
  rbpn::ModelConfig c;
  c.context_n = 2;
  c.c_l = c.c_m = c.c_h = 8;
  c.sisr_stages = 2;
  c.resnet_blocks = 1;
  const rbpn::Model m = rbpn::build_model(rbpn::validate_config(c), 1);
  const rbpn::Tensor t = noise(rbpn::Shape{3, 32, 32}, 8);
  const std::vector<rbpn::Frame> nbrs{noise(rbpn::Shape{3, 32, 32}, 9), noise(rbpn::Shape{3, 32, 32}, 10)};
  const std::vector<rbpn::flow::FlowField> flows(2, rbpn::flow::FlowField(32, 32));
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(t, nbrs, flows));
}
BENCHMARK(BM_TinyForward)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
