#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "rbpn/tensor.hpp"

namespace rbpn {

// An RGB frame: 3 x H x W, nominal range [0, 1].
using Frame = Tensor;

Frame make_frame(int h, int w, double fill = 0.0);

// 8-bit RGB PNG. Gray and alpha inputs are expanded/dropped on read.
Frame read_png(const std::filesystem::path& path);
// Header-only read: {height, width}.
std::pair<int, int> png_size(const std::filesystem::path& path);
// Values are clipped to [0, 1] and rounded to 8 bits.
void write_png(const Frame& frame, const std::filesystem::path& path);

// Round to the nearest 1/255 step after clipping; what a PNG round-trip does.
Frame quantize_8bit(const Frame& frame);
Frame clip01(const Frame& frame);

}  // namespace rbpn
