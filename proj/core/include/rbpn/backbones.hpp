#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rbpn/config.hpp"
#include "rbpn/layers.hpp"

namespace rbpn::nn {

enum class Rescale { kSame, kUp, kDown };

// A named layer graph with a fixed input/output contract:
// in_ch x h x w  ->  out_ch x (h, w scaled per `rescale`).
class Subnet {
 public:
  Subnet(std::string name, int in_ch, int out_ch, Rescale rescale, int scale, std::unique_ptr<Layer> graph);
  Subnet(Subnet&&) noexcept = default;
  Subnet& operator=(Subnet&&) noexcept = default;

  // Throws ShapeError when x does not match the input contract.
  ag::Var forward(const ag::Var& x) const;

  Shape out_shape(const Shape& in) const;
  std::int64_t flops(int h, int w) const;
  std::int64_t param_count() const { return count_params(params_); }
  const ParamRefs& params() const noexcept { return params_; }

  const std::string& name() const noexcept { return name_; }
  int in_channels() const noexcept { return in_ch_; }
  int out_channels() const noexcept { return out_ch_; }

 private:
  std::string name_;
  int in_ch_;
  int out_ch_;
  Rescale rescale_;
  int scale_;
  std::unique_ptr<Layer> graph_;
  ParamRefs params_;
};

struct FeatureExtractors {
  Subnet feat_l;  // 3 -> c_l
  Subnet feat_m;  // 8 (or 6 without flow) -> c_m
};

FeatureExtractors build_feature_extractors(const ValidatedConfig& cfg);
// Single 3x3 conv + PReLU from `in_channels` to c_l (the DBPN-MISR stacked input).
Subnet build_stacked_extractor(const ValidatedConfig& cfg, int in_channels);
Subnet build_sisr(const ValidatedConfig& cfg);
Subnet build_misr(const ValidatedConfig& cfg);
Subnet build_res(const ValidatedConfig& cfg);
Subnet build_decoder(const ValidatedConfig& cfg);
// in_channels = n * c_h for CONCAT with n >= 1, else c_h.
Subnet build_reconstruction(const ValidatedConfig& cfg);
Subnet build_reconstruction(const ValidatedConfig& cfg, int in_channels);

// Input channels of the neighbor stack: target + neighbor (+ flow).
int neighbor_stack_channels(const ModelConfig& cfg);

}  // namespace rbpn::nn
