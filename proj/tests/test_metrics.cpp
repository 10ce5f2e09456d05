#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rbpn/errors.hpp"
#include "rbpn/metrics.hpp"
#include "support.hpp"

namespace rbpn {
namespace {

using testing::random_tensor;

Frame solid(double r, double g, double b) {
  Frame f(Shape{3, 2, 2});
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      f.at(0, y, x) = r;
      f.at(1, y, x) = g;
      f.at(2, y, x) = b;
    }
  }
  return f;
}

TEST(Luma, StudioSwingExamples) {
  EXPECT_NEAR(rgb_to_y(solid(1, 1, 1)).at(0, 0, 0), 235.0 / 255.0, 1e-12);
  EXPECT_NEAR(rgb_to_y(solid(0, 0, 0)).at(0, 1, 1), 16.0 / 255.0, 1e-12);
  EXPECT_NEAR(rgb_to_y(solid(0, 1, 0)).at(0, 0, 1), (128.553 + 16.0) / 255.0, 1e-12);
  EXPECT_EQ(rgb_to_y(solid(0, 1, 0)).shape(), (Shape{1, 2, 2}));
}

TEST(Psnr, IdenticalAndOffset) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor(Shape{1, 9, 7}, rng, 0.1, 0.8);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  Tensor b = a;
  for (double& v : b.values()) v += 16.0 / 255.0;
  EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(255.0 / 16.0), 1e-6);
  EXPECT_NEAR(psnr(a, b), 24.05, 0.005);
  EXPECT_THROW(psnr(a, Tensor(Shape{1, 9, 8})), ShapeError);
}

TEST(Ssim, IdenticalIsOne) {
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor(Shape{1, 20, 24}, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Metrics, Symmetric) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor a = random_tensor(Shape{1, 13, 17}, rng);
    const Tensor b = random_tensor(Shape{1, 13, 17}, rng);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
  }
}

// Direct evaluation: every window position, every tap, no separability.
double brute_ssim(const Tensor& a, const Tensor& b) {
  const int h = a.height();
  const int w = a.width();
  int win = std::min({11, h, w});
  if (win % 2 == 0) --win;
  const int r = win / 2;
  std::vector<double> k(static_cast<std::size_t>(win * win));
  double norm = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      k[static_cast<std::size_t>((dy + r) * win + dx + r)] = v;
      norm += v;
    }
  }
  const double c1 = std::pow(0.01 * 255, 2);
  const double c2 = std::pow(0.03 * 255, 2);
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y + win <= h; ++y) {
    for (int x = 0; x + win <= w; ++x) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double g = k[static_cast<std::size_t>(i * win + j)] / norm;
          const double p = a.at(0, y + i, x + j) * 255.0;
          const double q = b.at(0, y + i, x + j) * 255.0;
          mx += g * p;
          my += g * q;
          sxx += g * p * p;
          syy += g * q * q;
          sxy += g * p * q;
        }
      }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cov = sxy - mx * my;
      sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return sum / count;
}

double brute_psnr(const Tensor& a, const Tensor& b) {
  double mse = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const double d = (a.at(0, y, x) - b.at(0, y, x)) * 255.0;
      mse += d * d;
    }
  }
  mse /= a.height() * a.width();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

TEST(Metrics, MatchBruteForceOnSmallImages) {
  std::mt19937_64 rng(4);
  for (const auto& [h, w] : {std::pair{8, 8}, std::pair{7, 5}, std::pair{6, 8}, std::pair{3, 3}}) {
    const Tensor a = random_tensor(Shape{1, h, w}, rng);
    Tensor b = a;
    for (double& v : b.values()) v = std::clamp(v + std::normal_distribution<double>(0.0, 0.1)(rng), 0.0, 1.0);
    const double s = brute_ssim(a, b);
    EXPECT_NEAR(ssim(a, b), s, 1e-9 * std::abs(s)) << h << "x" << w;
    const double p = brute_psnr(a, b);
    EXPECT_NEAR(psnr(a, b), p, 1e-9 * p) << h << "x" << w;
  }
}

TEST(Metrics, ShaveRemovesBorder) {
  std::mt19937_64 rng(5);
  const Tensor a = random_tensor(Shape{1, 30, 41}, rng);
  const Tensor s = shave(a, 8);
  EXPECT_EQ(s.shape(), (Shape{1, 14, 25}));
  EXPECT_EQ(s.at(0, 0, 0), a.at(0, 8, 8));
  EXPECT_EQ(shave(a, 0), a);
  EXPECT_THROW(shave(a, 15), ShapeError);
}

TEST(Metrics, LumaWrappersCropFirst) {
  std::mt19937_64 rng(6);
  const Frame a = random_tensor(Shape{3, 24, 24}, rng);
  Frame b = a;
  b.at(1, 0, 0) = 1.0 - b.at(1, 0, 0);  // only inside the border
  EXPECT_EQ(psnr_y(a, b, 8), kPsnrCap);
  EXPECT_LT(psnr_y(a, b, 0), kPsnrCap);
  EXPECT_NEAR(ssim_y(a, b, 8), 1.0, 1e-12);
}

}  // namespace
}  // namespace rbpn
