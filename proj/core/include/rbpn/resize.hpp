#pragma once

#include <vector>

#include "rbpn/tensor.hpp"

namespace rbpn {

// Separable resampling weights along one axis, MATLAB imresize style:
// output pixel i reads in[index[i*taps + j]] * weight[i*taps + j].
struct ResizeWeights {
  int out_len = 0;
  int taps = 0;
  std::vector<int> index;
  std::vector<double> weight;
};

// Keys cubic with a = -0.5.
double cubic_kernel(double x);

// With antialias and scale < 1 the kernel is stretched by 1/scale. Edges use
// symmetric (half-sample) reflection.
ResizeWeights resize_weights(int in_len, int out_len, double scale, bool antialias = true);

// MATLAB-compatible bicubic resize of every channel. Output dims are
// ceil(scale * in). No clipping or quantization is applied.
Tensor bicubic_resize(const Tensor& img, double scale);
Tensor bicubic_resize(const Tensor& img, int out_h, int out_w, double scale);

}  // namespace rbpn
