#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rbpn {

// Channel-major (C x H x W) shape of a single feature map or image.
struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const noexcept {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Dense C x H x W array of doubles. Value type; copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  int channels() const noexcept { return shape_.c; }
  int height() const noexcept { return shape_.h; }
  int width() const noexcept { return shape_.w; }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_.h) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(shape_.w) +
           static_cast<std::size_t>(x);
  }
  double& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(double v);
  bool all_finite() const noexcept;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double k);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_{};
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);

// Channel-wise concatenation; all parts must share H and W.
Tensor concat_channels(std::span<const Tensor> parts);
// Channels [begin, begin + count).
Tensor slice_channels(const Tensor& t, int begin, int count);
// Spatial window [y, y + h) x [x, x + w); must lie inside t.
Tensor crop(const Tensor& t, int y, int x, int h, int w);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rbpn
