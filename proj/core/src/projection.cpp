#include "rbpn/projection.hpp"

#include "rbpn/errors.hpp"

namespace rbpn {

ProjectionModule::ProjectionModule(const ValidatedConfig& cfg, bool with_decoder)
    : cfg_(cfg.get()), sisr_(nn::build_sisr(cfg)), misr_(nn::build_misr(cfg)), res_(nn::build_res(cfg)) {
  if (with_decoder) dec_.emplace(nn::build_decoder(cfg));
}

EncodeResult ProjectionModule::encode(const ag::Var& l_prev, const ag::Var& m_k, ResidualMode mode) const {
  const Shape& l = l_prev.shape();
  const Shape& m = m_k.shape();
  if (l.c != cfg_.c_l || m.c != cfg_.c_m || l.h != m.h || l.w != m.w) {
    throw ShapeError("encode expects L " + std::to_string(cfg_.c_l) + "xHxW and M " + std::to_string(cfg_.c_m) +
                     "xHxW, got " + to_string(l) + " and " + to_string(m));
  }
  EncodeResult r;
  r.h_l = sisr_.forward(l_prev);
  r.h_m = misr_.forward(m_k);
  if (mode == ResidualMode::kZero) {
    r.e = ag::constant(Tensor(r.h_l.shape()));
  } else {
    r.e = res_.forward(ag::sub(r.h_l, r.h_m));
  }
  r.h = ag::add(r.h_l, r.e);
  return r;
}

ag::Var ProjectionModule::decode(const ag::Var& h_k) const {
  if (!dec_) throw ConfigError("this projection module has no decoder");
  const Shape& s = h_k.shape();
  if (s.c != cfg_.c_h) {
    throw ShapeError("decode expects " + std::to_string(cfg_.c_h) + " channels, got " + to_string(s));
  }
  return dec_->forward(h_k);
}

nn::ParamRefs ProjectionModule::params() const {
  nn::ParamRefs out;
  for (const nn::Subnet* s : {&sisr_, &misr_, &res_}) out.insert(out.end(), s->params().begin(), s->params().end());
  if (dec_) out.insert(out.end(), dec_->params().begin(), dec_->params().end());
  return out;
}

}  // namespace rbpn
