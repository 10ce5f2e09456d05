#include "rbpn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rbpn/errors.hpp"

namespace rbpn {

Tensor rgb_to_y(const Frame& img) {
  if (img.channels() != 3) throw ShapeError("rgb_to_y expects 3 channels, got " + to_string(img.shape()));
  Tensor y(Shape{1, img.height(), img.width()});
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      y.at(0, r, c) =
          (65.481 * img.at(0, r, c) + 128.553 * img.at(1, r, c) + 24.966 * img.at(2, r, c) + 16.0) / 255.0;
    }
  }
  return y;
}

Tensor shave(const Tensor& t, int border) {
  if (border < 0) throw RangeError("border crop must be >= 0");
  if (border == 0) return t;
  if (2 * border >= t.height() || 2 * border >= t.width()) {
    throw ShapeError("border " + std::to_string(border) + " leaves nothing of " + to_string(t.shape()));
  }
  return crop(t, border, border, t.height() - 2 * border, t.width() - 2 * border);
}

double psnr(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("psnr: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  if (a.numel() == 0) throw EmptyInputError("psnr of empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = (a[i] - b[i]) * 255.0;
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.numel());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const double mid = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double x = i - mid;
    g[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& in, int h, int w, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h * ow));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += g[static_cast<std::size_t>(j)] * in[static_cast<std::size_t>(y * w + x + j)];
      tmp[static_cast<std::size_t>(y * ow + x)] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>((y + i) * ow + x)];
      out[static_cast<std::size_t>(y * ow + x)] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("ssim: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  if (a.numel() == 0) throw EmptyInputError("ssim of empty images");
  const int h = a.height();
  const int w = a.width();
  int win = std::min({11, h, w});
  if (win % 2 == 0) --win;
  const std::vector<double> g = gaussian_window(win, 1.5);
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);

  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      x[i] = a[c * plane + i] * 255.0;
      y[i] = b[c * plane + i] * 255.0;
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g);
    const auto my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g);
    const auto syy = filter_valid(yy, h, w, g);
    const auto sxy = filter_valid(xy, h, w, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / a.channels();
}

double psnr_y(const Frame& a, const Frame& b, int border) { return psnr(shave(rgb_to_y(a), border), shave(rgb_to_y(b), border)); }

double ssim_y(const Frame& a, const Frame& b, int border) { return ssim(shave(rgb_to_y(a), border), shave(rgb_to_y(b), border)); }

}  // namespace rbpn
