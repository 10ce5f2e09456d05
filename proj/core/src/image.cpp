#include "rbpn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "rbpn/errors.hpp"

namespace rbpn {

Frame make_frame(int h, int w, double fill) { return Frame(Shape{3, h, w}, fill); }

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

double to_unit(png_byte v) { return static_cast<double>(v) / 255.0; }

png_byte to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<png_byte>(std::lround(c * 255.0));
}

}  // namespace

Frame read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_byte> pixels;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG layout in " + path.string());
  }
  pixels.resize(stride * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Frame f = make_frame(static_cast<int>(height), static_cast<int>(width));
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      const png_byte* px = rows[static_cast<std::size_t>(y)] + static_cast<std::size_t>(x) * 3;
      for (int c = 0; c < 3; ++c) f.at(c, y, x) = to_unit(px[c]);
    }
  }
  return f;
}

std::pair<int, int> png_size(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  // Signature (8), IHDR length (4), "IHDR" (4), width (4, BE), height (4, BE).
  unsigned char head[24];
  if (std::fread(head, 1, sizeof(head), fp.get()) != sizeof(head) || png_sig_cmp(head, 0, 8) != 0 ||
      std::memcmp(head + 12, "IHDR", 4) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }
  const auto be32 = [](const unsigned char* b) {
    return static_cast<int>((std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
                            std::uint32_t{b[3]});
  };
  return {be32(head + 20), be32(head + 16)};
}

void write_png(const Frame& frame, const std::filesystem::path& path) {
  if (frame.channels() != 3) throw ShapeError("write_png expects a 3-channel frame, got " + to_string(frame.shape()));
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  const std::size_t stride = static_cast<std::size_t>(frame.width()) * 3;
  std::vector<png_byte> pixels(stride * static_cast<std::size_t>(frame.height()));
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      for (int c = 0; c < 3; ++c) pixels[y * stride + x * 3 + c] = to_byte(frame.at(c, y, x));
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(frame.height()));
  for (int y = 0; y < frame.height(); ++y) rows[y] = pixels.data() + y * stride;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width()), static_cast<png_uint_32>(frame.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Frame quantize_8bit(const Frame& frame) {
  Frame out = frame;
  for (double& v : out.values()) v = static_cast<double>(to_byte(v)) / 255.0;
  return out;
}

Frame clip01(const Frame& frame) {
  Frame out = frame;
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace rbpn
