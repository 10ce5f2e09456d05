#include "rbpn/resize.hpp"

#include <cmath>

#include "rbpn/errors.hpp"

namespace rbpn {

double cubic_kernel(double x) {
  const double a = std::abs(x);
  const double a2 = a * a;
  const double a3 = a2 * a;
  if (a <= 1.0) return 1.5 * a3 - 2.5 * a2 + 1.0;
  if (a <= 2.0) return -0.5 * a3 + 2.5 * a2 - 4.0 * a + 2.0;
  return 0.0;
}

ResizeWeights resize_weights(int in_len, int out_len, double scale, bool antialias) {
  if (in_len < 1 || out_len < 1) throw ShapeError("resize needs positive lengths");
  if (!(scale > 0.0)) throw RangeError("resize scale must be positive");
  const bool stretch = antialias && scale < 1.0;
  const double width = stretch ? 4.0 / scale : 4.0;
  const int taps = static_cast<int>(std::ceil(width)) + 2;

  ResizeWeights rw;
  rw.out_len = out_len;
  rw.taps = taps;
  rw.index.resize(static_cast<std::size_t>(out_len) * taps);
  rw.weight.resize(static_cast<std::size_t>(out_len) * taps);
  const int period = 2 * in_len;
  for (int i = 0; i < out_len; ++i) {
    // 1-based output coordinate mapped into 1-based input coordinates.
    const double u = (i + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const int left = static_cast<int>(std::floor(u - width / 2.0));
    double sum = 0.0;
    for (int j = 0; j < taps; ++j) {
      const int pos = left + j;
      const double d = u - pos;
      const double w = stretch ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
      // Symmetric padding: 1..n, n..1, repeating.
      int m = (pos - 1) % period;
      if (m < 0) m += period;
      const int src = m < in_len ? m : period - 1 - m;
      rw.index[static_cast<std::size_t>(i) * taps + j] = src;
      rw.weight[static_cast<std::size_t>(i) * taps + j] = w;
      sum += w;
    }
    for (int j = 0; j < taps; ++j) rw.weight[static_cast<std::size_t>(i) * taps + j] /= sum;
  }
  return rw;
}

Tensor bicubic_resize(const Tensor& img, double scale) {
  const int out_h = static_cast<int>(std::ceil(scale * img.height() - 1e-9));
  const int out_w = static_cast<int>(std::ceil(scale * img.width() - 1e-9));
  return bicubic_resize(img, out_h, out_w, scale);
}

Tensor bicubic_resize(const Tensor& img, int out_h, int out_w, double scale) {
  if (out_h < 1 || out_w < 1) throw ShapeError("bicubic_resize output would be empty");
  const ResizeWeights rows = resize_weights(img.height(), out_h, scale);
  const ResizeWeights cols = resize_weights(img.width(), out_w, scale);

  // Vertical pass first, then horizontal.
  Tensor mid(Shape{img.channels(), out_h, img.width()});
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      const int* idx = &rows.index[static_cast<std::size_t>(y) * rows.taps];
      const double* wt = &rows.weight[static_cast<std::size_t>(y) * rows.taps];
      for (int x = 0; x < img.width(); ++x) {
        double acc = 0.0;
        for (int j = 0; j < rows.taps; ++j) acc += wt[j] * img.at(c, idx[j], x);
        mid.at(c, y, x) = acc;
      }
    }
  }
  Tensor out(Shape{img.channels(), out_h, out_w});
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        const int* idx = &cols.index[static_cast<std::size_t>(x) * cols.taps];
        const double* wt = &cols.weight[static_cast<std::size_t>(x) * cols.taps];
        double acc = 0.0;
        for (int j = 0; j < cols.taps; ++j) acc += wt[j] * mid.at(c, y, idx[j]);
        out.at(c, y, x) = acc;
      }
    }
  }
  return out;
}

}  // namespace rbpn
