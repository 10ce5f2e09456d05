#pragma once

#include <optional>

#include "rbpn/backbones.hpp"

namespace rbpn {

// Everything the encoder computes for one neighbor. `h` is what the
// recurrence carries forward; the rest is exposed so tests can check the
// back-projection algebra directly.
struct EncodeResult {
  ag::Var h;    // h_l + e
  ag::Var h_l;  // sisr(L_prev)
  ag::Var h_m;  // misr(M_k)
  ag::Var e;    // res(h_l - h_m)
};

enum class ResidualMode {
  kLearned,
  kZero,  // replace the res subnet output by zeros
};

// One encoder/decoder pair. A single instance serves every time step, so all
// steps read and update the same weights.
class ProjectionModule {
 public:
  explicit ProjectionModule(const ValidatedConfig& cfg, bool with_decoder = true);

  // L_prev: c_l x h x w, m_k: c_m x h x w. Throws ShapeError otherwise.
  EncodeResult encode(const ag::Var& l_prev, const ag::Var& m_k, ResidualMode mode = ResidualMode::kLearned) const;
  // c_h x sh x sw -> c_l x h x w. Throws ShapeError, or ConfigError when the
  // module was built without a decoder.
  ag::Var decode(const ag::Var& h_k) const;

  const nn::Subnet& sisr() const noexcept { return sisr_; }
  const nn::Subnet& misr() const noexcept { return misr_; }
  const nn::Subnet& res() const noexcept { return res_; }
  const nn::Subnet* decoder() const noexcept { return dec_ ? &*dec_ : nullptr; }

  nn::ParamRefs params() const;

 private:
  ModelConfig cfg_;
  nn::Subnet sisr_;
  nn::Subnet misr_;
  nn::Subnet res_;
  std::optional<nn::Subnet> dec_;
};

}  // namespace rbpn
