#include "rbpn/layers.hpp"

#include <cmath>

#include "rbpn/errors.hpp"

namespace rbpn::nn {

namespace {

Parameter make_param(std::string name, std::vector<int> dims, Shape storage, ParamRole role, int fan_in) {
  Parameter p;
  p.name = std::move(name);
  p.dims = std::move(dims);
  p.role = role;
  p.fan_in = fan_in;
  p.var = ag::Var(Tensor(storage), true);
  return p;
}

kernels::ConvGeometry same3x3(int in, int out) { return {in, out, 3, 1, 1, false}; }
kernels::ConvGeometry upsample(int ch, ResampleSpec s) { return {ch, ch, s.kernel, s.stride, s.pad, true}; }
kernels::ConvGeometry downsample(int ch, ResampleSpec s) { return {ch, ch, s.kernel, s.stride, s.pad, false}; }

}  // namespace

ConvLayer::ConvLayer(std::string name, kernels::ConvGeometry g, bool activation) : g_(g), activation_(activation) {
  const int kk = g.kernel * g.kernel;
  if (g.transposed) {
    // Fan-in taken from the second weight dim, as PyTorch does for
    // transposed convolutions. This shrinks the upsampling paths at init and
    // keeps the recurrence from blowing up.
    weight_ = make_param(name + ".weight", {g.in_ch, g.out_ch, g.kernel, g.kernel}, Shape{g.in_ch, g.out_ch, kk},
                         ParamRole::kWeight, g.out_ch * kk);
  } else {
    weight_ = make_param(name + ".weight", {g.out_ch, g.in_ch, g.kernel, g.kernel}, Shape{g.out_ch, g.in_ch, kk},
                         ParamRole::kWeight, g.in_ch * kk);
  }
  bias_ = make_param(name + ".bias", {g.out_ch}, Shape{g.out_ch, 1, 1}, ParamRole::kBias, 1);
  if (activation_) {
    slope_ = make_param(name + ".prelu", {g.out_ch}, Shape{g.out_ch, 1, 1}, ParamRole::kSlope, 1);
    slope_.var.mutable_value().fill(0.25);
  }
}

ag::Var ConvLayer::forward(const ag::Var& x) const {
  ag::Var y = ag::conv(g_, x, weight_.var, bias_.var);
  return activation_ ? ag::prelu(y, slope_.var) : y;
}

Shape ConvLayer::output_shape(const Shape& in) const {
  if (in.c != g_.in_ch) {
    throw ShapeError(weight_.name + " expects " + std::to_string(g_.in_ch) + " channels, got " + to_string(in));
  }
  const Shape out = g_.output_shape(in);
  if (out.h < 1 || out.w < 1) throw ShapeError(weight_.name + " produces an empty map for " + to_string(in));
  return out;
}

std::int64_t ConvLayer::flops(const Shape& in) const {
  const Shape out = output_shape(in);
  // A transposed convolution performs its multiply-adds once per input pixel.
  const std::int64_t positions =
      g_.transposed ? static_cast<std::int64_t>(in.plane()) : static_cast<std::int64_t>(out.plane());
  return 2LL * g_.kernel * g_.kernel * g_.in_ch * g_.out_ch * positions;
}

void ConvLayer::collect(ParamRefs& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
  if (activation_) out.push_back(&slope_);
}

ResidualBlock::ResidualBlock(const std::string& name, int channels)
    : channels_(channels),
      first_(name + ".conv1", same3x3(channels, channels), true),
      second_(name + ".conv2", same3x3(channels, channels), false) {}

ag::Var ResidualBlock::forward(const ag::Var& x) const { return ag::add(x, second_.forward(first_.forward(x))); }

Shape ResidualBlock::output_shape(const Shape& in) const { return second_.output_shape(first_.output_shape(in)); }

std::int64_t ResidualBlock::flops(const Shape& in) const { return first_.flops(in) + second_.flops(in); }

void ResidualBlock::collect(ParamRefs& out) {
  first_.collect(out);
  second_.collect(out);
}

UpProjection::UpProjection(const std::string& name, int channels, ResampleSpec spec)
    : up1_(name + ".up1", upsample(channels, spec), true),
      down_(name + ".down", downsample(channels, spec), true),
      up2_(name + ".up2", upsample(channels, spec), true) {}

ag::Var UpProjection::forward(const ag::Var& l) const {
  ag::Var h0 = up1_.forward(l);
  ag::Var l0 = down_.forward(h0);
  ag::Var h1 = up2_.forward(ag::sub(l0, l));
  return ag::add(h1, h0);
}

Shape UpProjection::output_shape(const Shape& in) const {
  const Shape h = up1_.output_shape(in);
  if (down_.output_shape(h) != in) throw ShapeError("up-projection geometry does not round-trip " + to_string(in));
  return h;
}

std::int64_t UpProjection::flops(const Shape& in) const {
  const Shape h = up1_.output_shape(in);
  return up1_.flops(in) + down_.flops(h) + up2_.flops(in);
}

void UpProjection::collect(ParamRefs& out) {
  up1_.collect(out);
  down_.collect(out);
  up2_.collect(out);
}

DownProjection::DownProjection(const std::string& name, int channels, ResampleSpec spec)
    : down1_(name + ".down1", downsample(channels, spec), true),
      up_(name + ".up", upsample(channels, spec), true),
      down2_(name + ".down2", downsample(channels, spec), true) {}

ag::Var DownProjection::forward(const ag::Var& h) const {
  ag::Var l0 = down1_.forward(h);
  ag::Var h0 = up_.forward(l0);
  ag::Var l1 = down2_.forward(ag::sub(h0, h));
  return ag::add(l1, l0);
}

Shape DownProjection::output_shape(const Shape& in) const {
  const Shape l = down1_.output_shape(in);
  if (up_.output_shape(l) != in) throw ShapeError("down-projection geometry does not round-trip " + to_string(in));
  return l;
}

std::int64_t DownProjection::flops(const Shape& in) const {
  const Shape l = down1_.output_shape(in);
  return down1_.flops(in) + up_.flops(l) + down2_.flops(in);
}

void DownProjection::collect(ParamRefs& out) {
  down1_.collect(out);
  up_.collect(out);
  down2_.collect(out);
}

BackProjectionStages::BackProjectionStages(const std::string& name, int in_channels, int channels, int stages,
                                           ResampleSpec spec)
    : reduce_(name + ".reduce", {in_channels, channels, 1, 1, 0, false}, true),
      fuse_(name + ".fuse", same3x3(stages * channels, channels), true) {
  for (int i = 0; i < stages; ++i) {
    ups_.push_back(std::make_unique<UpProjection>(name + ".up" + std::to_string(i + 1), channels, spec));
    if (i + 1 < stages) {
      downs_.push_back(std::make_unique<DownProjection>(name + ".down" + std::to_string(i + 1), channels, spec));
    }
  }
}

ag::Var BackProjectionStages::forward(const ag::Var& x) const {
  ag::Var l = reduce_.forward(x);
  std::vector<ag::Var> hr;
  hr.reserve(ups_.size());
  for (std::size_t i = 0; i < ups_.size(); ++i) {
    hr.push_back(ups_[i]->forward(l));
    if (i < downs_.size()) l = downs_[i]->forward(hr.back());
  }
  return fuse_.forward(ag::concat(hr));
}

Shape BackProjectionStages::output_shape(const Shape& in) const {
  const Shape l = reduce_.output_shape(in);
  const Shape h = ups_.front()->output_shape(l);
  return fuse_.output_shape(Shape{h.c * static_cast<int>(ups_.size()), h.h, h.w});
}

std::int64_t BackProjectionStages::flops(const Shape& in) const {
  const Shape l = reduce_.output_shape(in);
  const Shape h = ups_.front()->output_shape(l);
  std::int64_t total = reduce_.flops(in);
  for (const auto& u : ups_) total += u->flops(l);
  for (const auto& d : downs_) total += d->flops(h);
  return total + fuse_.flops(Shape{h.c * static_cast<int>(ups_.size()), h.h, h.w});
}

void BackProjectionStages::collect(ParamRefs& out) {
  reduce_.collect(out);
  for (std::size_t i = 0; i < ups_.size(); ++i) {
    ups_[i]->collect(out);
    if (i < downs_.size()) downs_[i]->collect(out);
  }
  fuse_.collect(out);
}

ag::Var Sequential::forward(const ag::Var& x) const {
  ag::Var y = x;
  for (const auto& l : layers_) y = l->forward(y);
  return y;
}

Shape Sequential::output_shape(const Shape& in) const {
  Shape s = in;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

std::int64_t Sequential::flops(const Shape& in) const {
  Shape s = in;
  std::int64_t total = 0;
  for (const auto& l : layers_) {
    total += l->flops(s);
    s = l->output_shape(s);
  }
  return total;
}

void Sequential::collect(ParamRefs& out) {
  for (const auto& l : layers_) l->collect(out);
}

std::int64_t count_params(const ParamRefs& params) {
  std::int64_t n = 0;
  for (const Parameter* p : params) n += static_cast<std::int64_t>(p->numel());
  return n;
}

void init_he(const ParamRefs& params, std::mt19937_64& rng) {
  for (Parameter* p : params) {
    Tensor& t = p->var.mutable_value();
    switch (p->role) {
      case ParamRole::kWeight: {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(p->fan_in)));
        for (double& v : t.values()) v = dist(rng);
        break;
      }
      case ParamRole::kBias:
        t.fill(0.0);
        break;
      case ParamRole::kSlope:
        t.fill(0.25);
        break;
    }
  }
}

}  // namespace rbpn::nn
