#include "rbpn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rbpn/errors.hpp"

namespace rbpn {

std::string to_string(const Shape& s) {
  return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor data has " + std::to_string(data_.size()) + " elements, shape " + to_string(shape_) +
                     " needs " + std::to_string(shape_.numel()));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) throw ShapeError("add: " + to_string(shape_) + " vs " + to_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (other.shape_ != shape_) throw ShapeError("sub: " + to_string(shape_) + " vs " + to_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double k) {
  for (double& v : data_) v *= k;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const int h = parts.front().height();
  const int w = parts.front().width();
  int c = 0;
  for (const Tensor& p : parts) {
    if (p.height() != h || p.width() != w) {
      throw ShapeError("concat spatial mismatch: " + to_string(parts.front().shape()) + " vs " + to_string(p.shape()));
    }
    c += p.channels();
  }
  Tensor out(Shape{c, h, w});
  double* dst = out.data();
  for (const Tensor& p : parts) {
    std::memcpy(dst, p.data(), p.numel() * sizeof(double));
    dst += p.numel();
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > t.channels()) {
    throw ShapeError("channel slice out of range for " + to_string(t.shape()));
  }
  Tensor out(Shape{count, t.height(), t.width()});
  std::memcpy(out.data(), t.data() + static_cast<std::size_t>(begin) * t.shape().plane(),
              out.numel() * sizeof(double));
  return out;
}

Tensor crop(const Tensor& t, int y, int x, int h, int w) {
  if (y < 0 || x < 0 || h < 0 || w < 0 || y + h > t.height() || x + w > t.width()) {
    throw ShapeError("crop window out of range for " + to_string(t.shape()));
  }
  Tensor out(Shape{t.channels(), h, w});
  for (int c = 0; c < t.channels(); ++c) {
    for (int r = 0; r < h; ++r) {
      std::memcpy(out.data() + out.index(c, r, 0), t.data() + t.index(c, y + r, x), static_cast<std::size_t>(w) * sizeof(double));
    }
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace rbpn
