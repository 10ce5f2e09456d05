#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rbpn/autograd.hpp"
#include "rbpn/config.hpp"

namespace rbpn::nn {

enum class ParamRole { kWeight, kBias, kSlope };

struct Parameter {
  std::string name;
  std::vector<int> dims;  // logical dims, e.g. {out, in, k, k}
  ParamRole role = ParamRole::kWeight;
  int fan_in = 1;  // used by He initialization
  ag::Var var;

  std::size_t numel() const { return var.value().numel(); }
};

// Flat view over every parameter reachable from some root, in a stable
// construction order. Pointers stay valid while the owning layers live.
using ParamRefs = std::vector<Parameter*>;

class Layer {
 public:
  virtual ~Layer() = default;
  virtual ag::Var forward(const ag::Var& x) const = 0;
  // Throws ShapeError if `in` is not accepted.
  virtual Shape output_shape(const Shape& in) const = 0;
  // 2 x multiply-adds of every convolution for an input of shape `in`.
  virtual std::int64_t flops(const Shape& in) const = 0;
  virtual void collect(ParamRefs& out) = 0;
};

// Convolution (regular or transposed), bias, optional per-channel PReLU.
class ConvLayer final : public Layer {
 public:
  ConvLayer(std::string name, kernels::ConvGeometry g, bool activation);

  ag::Var forward(const ag::Var& x) const override;
  Shape output_shape(const Shape& in) const override;
  std::int64_t flops(const Shape& in) const override;
  void collect(ParamRefs& out) override;

  const kernels::ConvGeometry& geometry() const noexcept { return g_; }
  bool has_activation() const noexcept { return activation_; }

 private:
  kernels::ConvGeometry g_;
  bool activation_;
  Parameter weight_;
  Parameter bias_;
  Parameter slope_;
};

// x + conv(act(conv(x))), 3x3 stride 1 pad 1, no activation after the skip.
class ResidualBlock final : public Layer {
 public:
  ResidualBlock(const std::string& name, int channels);

  ag::Var forward(const ag::Var& x) const override;
  Shape output_shape(const Shape& in) const override;
  std::int64_t flops(const Shape& in) const override;
  void collect(ParamRefs& out) override;

 private:
  int channels_;
  ConvLayer first_;
  ConvLayer second_;
};

// DBPN up-projection: h0 = up(l); l0 = down(h0); h1 = up(l0 - l); out = h0 + h1.
class UpProjection final : public Layer {
 public:
  UpProjection(const std::string& name, int channels, ResampleSpec spec);

  ag::Var forward(const ag::Var& x) const override;
  Shape output_shape(const Shape& in) const override;
  std::int64_t flops(const Shape& in) const override;
  void collect(ParamRefs& out) override;

 private:
  ConvLayer up1_;
  ConvLayer down_;
  ConvLayer up2_;
};

// DBPN down-projection: l0 = down(h); h0 = up(l0); l1 = down(h0 - h); out = l0 + l1.
class DownProjection final : public Layer {
 public:
  DownProjection(const std::string& name, int channels, ResampleSpec spec);

  ag::Var forward(const ag::Var& x) const override;
  Shape output_shape(const Shape& in) const override;
  std::int64_t flops(const Shape& in) const override;
  void collect(ParamRefs& out) override;

 private:
  ConvLayer down1_;
  ConvLayer up_;
  ConvLayer down2_;
};

// 1x1 reduction, T up-projections interleaved with T-1 down-projections,
// the T HR maps concatenated and fused by a 3x3 convolution.
class BackProjectionStages final : public Layer {
 public:
  BackProjectionStages(const std::string& name, int in_channels, int channels, int stages, ResampleSpec spec);

  ag::Var forward(const ag::Var& x) const override;
  Shape output_shape(const Shape& in) const override;
  std::int64_t flops(const Shape& in) const override;
  void collect(ParamRefs& out) override;

  int stages() const noexcept { return static_cast<int>(ups_.size()); }
  const UpProjection& up(int i) const { return *ups_.at(static_cast<std::size_t>(i)); }

 private:
  ConvLayer reduce_;
  std::vector<std::unique_ptr<UpProjection>> ups_;
  std::vector<std::unique_ptr<DownProjection>> downs_;
  ConvLayer fuse_;
};

class Sequential final : public Layer {
 public:
  void push(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  ag::Var forward(const ag::Var& x) const override;
  Shape output_shape(const Shape& in) const override;
  std::int64_t flops(const Shape& in) const override;
  void collect(ParamRefs& out) override;

  std::size_t size() const noexcept { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

std::int64_t count_params(const ParamRefs& params);

// He-normal weights (std = sqrt(2 / fan_in)), zero biases, PReLU slopes 0.25.
void init_he(const ParamRefs& params, std::mt19937_64& rng);

}  // namespace rbpn::nn
