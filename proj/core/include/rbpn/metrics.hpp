#pragma once

#include "rbpn/image.hpp"

namespace rbpn {

inline constexpr double kPsnrCap = 100.0;

// BT.601 studio-swing luma of an RGB frame in [0, 1]: 1 x H x W, values in
// [16/255, 235/255].
Tensor rgb_to_y(const Frame& img);

// Drop `border` pixels from every edge.
Tensor shave(const Tensor& t, int border);

// Both operate on planes scaled to [0, 1] and measure them on a 0..255 scale.
// Identical inputs give kPsnrCap. ShapeError on mismatched dims.
double psnr(const Tensor& a, const Tensor& b);
// Gaussian-windowed SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03, L 255),
// averaged over valid window positions. Planes smaller than the window use
// the largest odd window that fits.
double ssim(const Tensor& a, const Tensor& b);

// RGB frames -> Y, shave, then the metric.
double psnr_y(const Frame& a, const Frame& b, int border = 0);
double ssim_y(const Frame& a, const Frame& b, int border = 0);

}  // namespace rbpn
