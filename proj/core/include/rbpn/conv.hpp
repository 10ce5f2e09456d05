#pragma once

#include <span>

#include "rbpn/tensor.hpp"

namespace rbpn::kernels {

// Geometry of a square convolution. For a regular convolution the weight is
// laid out [out_ch][in_ch][k][k]; for a transposed one [in_ch][out_ch][k][k]
// (the PyTorch conventions).
struct ConvGeometry {
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
  bool transposed = false;

  std::size_t weight_count() const noexcept {
    return static_cast<std::size_t>(in_ch) * static_cast<std::size_t>(out_ch) * static_cast<std::size_t>(kernel) *
           static_cast<std::size_t>(kernel);
  }
  // Output spatial size along one axis for input extent `n`.
  int output_extent(int n) const noexcept {
    return transposed ? (n - 1) * stride - 2 * pad + kernel : (n + 2 * pad - kernel) / stride + 1;
  }
  Shape output_shape(const Shape& in) const noexcept { return {out_ch, output_extent(in.h), output_extent(in.w)}; }
};

Tensor conv_forward(const ConvGeometry& g, const Tensor& x, std::span<const double> weight,
                    std::span<const double> bias);

// Accumulates into dweight/dbias. dx is written (not accumulated) when non-null.
void conv_backward(const ConvGeometry& g, const Tensor& x, std::span<const double> weight, const Tensor& dy,
                   Tensor* dx, std::span<double> dweight, std::span<double> dbias);

}  // namespace rbpn::kernels
