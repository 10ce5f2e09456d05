#include "rbpn/conv.hpp"

#include <Eigen/Core>
#include <cstring>
#include <vector>

#include "rbpn/errors.hpp"

namespace rbpn::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// The "image" side is the high-resolution side of the correlation (input of a
// conv, output of a transposed conv); the "grid" side is the other one.
struct Correlation {
  int channels;
  int img_h, img_w;
  int grid_h, grid_w;
  int k, stride, pad;
};

// cols[(c*k + ky)*k + kx][gy*grid_w + gx] = img[c][gy*s - p + ky][gx*s - p + kx]
void im2col(const Correlation& m, const double* img, double* cols) {
  const std::size_t grid = static_cast<std::size_t>(m.grid_h) * static_cast<std::size_t>(m.grid_w);
  for (int c = 0; c < m.channels; ++c) {
    const double* plane = img + static_cast<std::size_t>(c) * m.img_h * m.img_w;
    for (int ky = 0; ky < m.k; ++ky) {
      for (int kx = 0; kx < m.k; ++kx) {
        double* row = cols + (static_cast<std::size_t>(c) * m.k * m.k + ky * m.k + kx) * grid;
        for (int gy = 0; gy < m.grid_h; ++gy) {
          const int iy = gy * m.stride - m.pad + ky;
          double* dst = row + static_cast<std::size_t>(gy) * m.grid_w;
          if (iy < 0 || iy >= m.img_h) {
            std::memset(dst, 0, sizeof(double) * m.grid_w);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * m.img_w;
          if (m.stride == 1) {
            for (int gx = 0; gx < m.grid_w; ++gx) {
              const int ix = gx - m.pad + kx;
              dst[gx] = (ix >= 0 && ix < m.img_w) ? src[ix] : 0.0;
            }
          } else {
            for (int gx = 0; gx < m.grid_w; ++gx) {
              const int ix = gx * m.stride - m.pad + kx;
              dst[gx] = (ix >= 0 && ix < m.img_w) ? src[ix] : 0.0;
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into the image.
void col2im(const Correlation& m, const double* cols, double* img) {
  const std::size_t grid = static_cast<std::size_t>(m.grid_h) * static_cast<std::size_t>(m.grid_w);
  for (int c = 0; c < m.channels; ++c) {
    double* plane = img + static_cast<std::size_t>(c) * m.img_h * m.img_w;
    for (int ky = 0; ky < m.k; ++ky) {
      for (int kx = 0; kx < m.k; ++kx) {
        const double* row = cols + (static_cast<std::size_t>(c) * m.k * m.k + ky * m.k + kx) * grid;
        for (int gy = 0; gy < m.grid_h; ++gy) {
          const int iy = gy * m.stride - m.pad + ky;
          if (iy < 0 || iy >= m.img_h) continue;
          const double* src = row + static_cast<std::size_t>(gy) * m.grid_w;
          double* dst = plane + static_cast<std::size_t>(iy) * m.img_w;
          for (int gx = 0; gx < m.grid_w; ++gx) {
            const int ix = gx * m.stride - m.pad + kx;
            if (ix >= 0 && ix < m.img_w) dst[ix] += src[gx];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

void check(const ConvGeometry& g, const Tensor& x, std::span<const double> weight, std::size_t bias_size) {
  if (x.channels() != g.in_ch) {
    throw ShapeError("conv expects " + std::to_string(g.in_ch) + " input channels, got " + to_string(x.shape()));
  }
  if (weight.size() != g.weight_count()) throw ShapeError("conv weight size mismatch");
  if (bias_size != 0 && bias_size != static_cast<std::size_t>(g.out_ch)) throw ShapeError("conv bias size mismatch");
  const Shape out = g.output_shape(x.shape());
  if (out.h < 1 || out.w < 1) throw ShapeError("conv output would be empty for input " + to_string(x.shape()));
}

void add_bias(Tensor& y, std::span<const double> bias) {
  if (bias.empty()) return;
  const std::size_t plane = y.shape().plane();
  for (int c = 0; c < y.channels(); ++c) {
    double* p = y.data() + c * plane;
    const double b = bias[c];
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

void accumulate_bias_grad(const Tensor& dy, std::span<double> dbias) {
  if (dbias.empty()) return;
  const std::size_t plane = dy.shape().plane();
  for (int c = 0; c < dy.channels(); ++c) {
    const double* p = dy.data() + c * plane;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    dbias[c] += s;
  }
}

}  // namespace

Tensor conv_forward(const ConvGeometry& g, const Tensor& x, std::span<const double> weight,
                    std::span<const double> bias) {
  check(g, x, weight, bias.size());
  const Shape out_shape = g.output_shape(x.shape());
  Tensor y(out_shape);
  const int kk = g.kernel * g.kernel;

  if (!g.transposed) {
    const Correlation m{g.in_ch, x.height(), x.width(), out_shape.h, out_shape.w, g.kernel, g.stride, g.pad};
    const Eigen::Index grid = static_cast<Eigen::Index>(out_shape.plane());
    ConstMapMat w(weight.data(), g.out_ch, static_cast<Eigen::Index>(g.in_ch) * kk);
    MapMat ym(y.data(), g.out_ch, grid);
    if (is_pointwise(g)) {
      ym.noalias() = w * ConstMapMat(x.data(), g.in_ch, grid);
    } else {
      std::vector<double> cols(static_cast<std::size_t>(g.in_ch) * kk * grid);
      im2col(m, x.data(), cols.data());
      ym.noalias() = w * ConstMapMat(cols.data(), static_cast<Eigen::Index>(g.in_ch) * kk, grid);
    }
  } else {
    const Correlation m{g.out_ch, out_shape.h, out_shape.w, x.height(), x.width(), g.kernel, g.stride, g.pad};
    const Eigen::Index grid = static_cast<Eigen::Index>(x.shape().plane());
    ConstMapMat w(weight.data(), g.in_ch, static_cast<Eigen::Index>(g.out_ch) * kk);
    std::vector<double> cols(static_cast<std::size_t>(g.out_ch) * kk * grid);
    MapMat cm(cols.data(), static_cast<Eigen::Index>(g.out_ch) * kk, grid);
    cm.noalias() = w.transpose() * ConstMapMat(x.data(), g.in_ch, grid);
    col2im(m, cols.data(), y.data());
  }
  add_bias(y, bias);
  return y;
}

void conv_backward(const ConvGeometry& g, const Tensor& x, std::span<const double> weight, const Tensor& dy,
                   Tensor* dx, std::span<double> dweight, std::span<double> dbias) {
  check(g, x, weight, dbias.size());
  if (dy.shape() != g.output_shape(x.shape())) throw ShapeError("conv backward: gradient shape mismatch");
  const int kk = g.kernel * g.kernel;
  const bool want_dw = !dweight.empty();

  if (!g.transposed) {
    const Correlation m{g.in_ch, x.height(), x.width(), dy.height(), dy.width(), g.kernel, g.stride, g.pad};
    const Eigen::Index grid = static_cast<Eigen::Index>(dy.shape().plane());
    const Eigen::Index rows = static_cast<Eigen::Index>(g.in_ch) * kk;
    ConstMapMat w(weight.data(), g.out_ch, rows);
    ConstMapMat dym(dy.data(), g.out_ch, grid);
    if (is_pointwise(g)) {
      if (want_dw) MapMat(dweight.data(), g.out_ch, rows).noalias() += dym * ConstMapMat(x.data(), rows, grid).transpose();
      if (dx != nullptr) {
        *dx = Tensor(x.shape());
        MapMat(dx->data(), rows, grid).noalias() = w.transpose() * dym;
      }
    } else {
      std::vector<double> cols(static_cast<std::size_t>(rows) * grid);
      if (want_dw) {
        im2col(m, x.data(), cols.data());
        MapMat(dweight.data(), g.out_ch, rows).noalias() += dym * ConstMapMat(cols.data(), rows, grid).transpose();
      }
      if (dx != nullptr) {
        MapMat(cols.data(), rows, grid).noalias() = w.transpose() * dym;
        *dx = Tensor(x.shape());
        col2im(m, cols.data(), dx->data());
      }
    }
  } else {
    const Correlation m{g.out_ch, dy.height(), dy.width(), x.height(), x.width(), g.kernel, g.stride, g.pad};
    const Eigen::Index grid = static_cast<Eigen::Index>(x.shape().plane());
    const Eigen::Index rows = static_cast<Eigen::Index>(g.out_ch) * kk;
    std::vector<double> cols(static_cast<std::size_t>(rows) * grid);
    im2col(m, dy.data(), cols.data());
    ConstMapMat cm(cols.data(), rows, grid);
    ConstMapMat w(weight.data(), g.in_ch, rows);
    if (want_dw) MapMat(dweight.data(), g.in_ch, rows).noalias() += ConstMapMat(x.data(), g.in_ch, grid) * cm.transpose();
    if (dx != nullptr) {
      *dx = Tensor(x.shape());
      MapMat(dx->data(), g.in_ch, grid).noalias() = w * cm;
    }
  }
  accumulate_bias_grad(dy, dbias);
}

}  // namespace rbpn::kernels
