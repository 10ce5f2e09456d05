#include "rbpn/backbones.hpp"

#include "rbpn/errors.hpp"

namespace rbpn::nn {

Subnet::Subnet(std::string name, int in_ch, int out_ch, Rescale rescale, int scale, std::unique_ptr<Layer> graph)
    : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), rescale_(rescale), scale_(scale), graph_(std::move(graph)) {
  graph_->collect(params_);
}

Shape Subnet::out_shape(const Shape& in) const {
  if (in.c != in_ch_ || in.h < 1 || in.w < 1) {
    throw ShapeError(name_ + " expects " + std::to_string(in_ch_) + "xHxW input, got " + to_string(in));
  }
  switch (rescale_) {
    case Rescale::kUp:
      return {out_ch_, in.h * scale_, in.w * scale_};
    case Rescale::kDown:
      if (in.h % scale_ != 0 || in.w % scale_ != 0) {
        throw ShapeError(name_ + " needs spatial dims divisible by " + std::to_string(scale_) + ", got " +
                         to_string(in));
      }
      return {out_ch_, in.h / scale_, in.w / scale_};
    case Rescale::kSame:
      break;
  }
  return {out_ch_, in.h, in.w};
}

ag::Var Subnet::forward(const ag::Var& x) const {
  const Shape expected = out_shape(x.shape());
  ag::Var y = graph_->forward(x);
  if (y.shape() != expected) {
    throw ShapeError(name_ + " produced " + to_string(y.shape()) + ", contract says " + to_string(expected));
  }
  return y;
}

std::int64_t Subnet::flops(int h, int w) const { return graph_->flops(Shape{in_ch_, h, w}); }

int neighbor_stack_channels(const ModelConfig& cfg) { return cfg.use_flow ? 8 : 6; }

namespace {
std::unique_ptr<Layer> single_conv(const std::string& name, int in, int out, bool activation) {
  return std::make_unique<ConvLayer>(name, kernels::ConvGeometry{in, out, 3, 1, 1, false}, activation);
}
}  // namespace

FeatureExtractors build_feature_extractors(const ValidatedConfig& cfg) {
  const ModelConfig& c = cfg.get();
  const int stack = neighbor_stack_channels(c);
  return {
      Subnet("feat_l", 3, c.c_l, Rescale::kSame, c.scale, single_conv("feat_l.conv", 3, c.c_l, true)),
      Subnet("feat_m", stack, c.c_m, Rescale::kSame, c.scale, single_conv("feat_m.conv", stack, c.c_m, true)),
  };
}

Subnet build_stacked_extractor(const ValidatedConfig& cfg, int in_channels) {
  return Subnet("feat_stack", in_channels, cfg->c_l, Rescale::kSame, cfg->scale,
                single_conv("feat_stack.conv", in_channels, cfg->c_l, true));
}

Subnet build_sisr(const ValidatedConfig& cfg) {
  const ModelConfig& c = cfg.get();
  return Subnet("sisr", c.c_l, c.c_h, Rescale::kUp, c.scale,
                std::make_unique<BackProjectionStages>("sisr", c.c_l, c.c_h, c.sisr_stages, cfg.resample()));
}

Subnet build_misr(const ValidatedConfig& cfg) {
  const ModelConfig& c = cfg.get();
  const ResampleSpec r = cfg.resample();
  auto seq = std::make_unique<Sequential>();
  for (int b = 0; b < c.resnet_blocks; ++b) {
    seq->push(std::make_unique<ResidualBlock>("misr.block" + std::to_string(b + 1), c.c_m));
  }
  seq->push(std::make_unique<ConvLayer>("misr.up", kernels::ConvGeometry{c.c_m, c.c_h, r.kernel, r.stride, r.pad, true},
                                        true));
  return Subnet("misr", c.c_m, c.c_h, Rescale::kUp, c.scale, std::move(seq));
}

Subnet build_res(const ValidatedConfig& cfg) {
  const ModelConfig& c = cfg.get();
  auto seq = std::make_unique<Sequential>();
  for (int b = 0; b < c.resnet_blocks; ++b) {
    seq->push(std::make_unique<ResidualBlock>("res.block" + std::to_string(b + 1), c.c_h));
  }
  return Subnet("res", c.c_h, c.c_h, Rescale::kSame, c.scale, std::move(seq));
}

Subnet build_decoder(const ValidatedConfig& cfg) {
  const ModelConfig& c = cfg.get();
  const ResampleSpec r = cfg.resample();
  auto seq = std::make_unique<Sequential>();
  for (int b = 0; b < c.resnet_blocks; ++b) {
    seq->push(std::make_unique<ResidualBlock>("dec.block" + std::to_string(b + 1), c.c_h));
  }
  seq->push(std::make_unique<ConvLayer>(
      "dec.down", kernels::ConvGeometry{c.c_h, c.c_l, r.kernel, r.stride, r.pad, false}, true));
  return Subnet("dec", c.c_h, c.c_l, Rescale::kDown, c.scale, std::move(seq));
}

Subnet build_reconstruction(const ValidatedConfig& cfg) {
  const ModelConfig& c = cfg.get();
  const bool concat = c.integration == Integration::kConcat && c.context_n >= 1;
  return build_reconstruction(cfg, concat ? c.context_n * c.c_h : c.c_h);
}

Subnet build_reconstruction(const ValidatedConfig& cfg, int in_channels) {
  return Subnet("rec", in_channels, 3, Rescale::kSame, cfg->scale, single_conv("rec.conv", in_channels, 3, false));
}

}  // namespace rbpn::nn
