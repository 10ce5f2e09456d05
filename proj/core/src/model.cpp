#include "rbpn/model.hpp"

#include <algorithm>
#include <fstream>
#include "json.hpp"

#include "rbpn/archive.hpp"
#include "rbpn/errors.hpp"
#include "rbpn/resize.hpp"

namespace rbpn {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kRbpn:
      return "RBPN";
    case ModelKind::kDbpnSisr:
      return "DBPN_SISR";
    case ModelKind::kDbpnMisr:
      return "DBPN_MISR";
    case ModelKind::kRbpnMisr:
      return "RBPN_MISR";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "RBPN" || s == "rbpn") return ModelKind::kRbpn;
  if (s == "DBPN_SISR" || s == "dbpn_sisr" || s == "DBPN" || s == "dbpn") return ModelKind::kDbpnSisr;
  if (s == "DBPN_MISR" || s == "dbpn_misr") return ModelKind::kDbpnMisr;
  if (s == "RBPN_MISR" || s == "rbpn_misr") return ModelKind::kRbpnMisr;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

namespace {

std::vector<int> ordered_offsets(int n, TemporalOrder order, std::uint64_t seed) {
  std::vector<int> off;
  off.reserve(static_cast<std::size_t>(n));
  if (order == TemporalOrder::kPF) {
    for (int d = 1; d <= n / 2; ++d) {
      off.push_back(-d);
      off.push_back(d);
    }
    return off;
  }
  for (int d = 1; d <= n; ++d) off.push_back(-d);
  if (order == TemporalOrder::kPR) {
    // Fisher-Yates driven directly by the engine output so the permutation is
    // identical across standard libraries.
    std::mt19937_64 rng(seed);
    for (std::size_t i = off.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(off[i - 1], off[j]);
    }
  }
  return off;
}

}  // namespace

ContextPlan plan_context(int t, int n, TemporalOrder order, std::uint64_t seed, int num_frames) {
  if (n < 0) throw RangeError("context length must be >= 0");
  if (order == TemporalOrder::kPF && n % 2 != 0) throw ConfigError("order/parity: PF needs an even context length");
  if (t < 0 || t >= num_frames) throw RangeError("target index " + std::to_string(t) + " outside sequence");
  ContextPlan plan{t, {}, order};
  for (int d : ordered_offsets(n, order, seed)) {
    const int k = t + d;
    if (k < 0 || k >= num_frames) {
      throw RangeError("neighbor " + std::to_string(k) + " of target " + std::to_string(t) +
                       " falls outside a sequence of " + std::to_string(num_frames) + " frames");
    }
    plan.neighbors.push_back(k);
  }
  return plan;
}

ClampedPlan plan_context_clamped(int t, int n, TemporalOrder order, std::uint64_t seed, int num_frames) {
  if (n < 0) throw RangeError("context length must be >= 0");
  if (order == TemporalOrder::kPF && n % 2 != 0) throw ConfigError("order/parity: PF needs an even context length");
  if (t < 0 || t >= num_frames) throw RangeError("target index " + std::to_string(t) + " outside sequence");
  ClampedPlan out{{t, {}, order}, {}};
  for (int d : ordered_offsets(n, order, seed)) {
    const int k = t + d;
    const int clamped = std::clamp(k, 0, num_frames - 1);
    out.plan.neighbors.push_back(clamped);
    out.replicated.push_back(clamped != k);
  }
  return out;
}

bool has_full_context(int t, int n, TemporalOrder order, int num_frames) {
  if (t < 0 || t >= num_frames) return false;
  if (order == TemporalOrder::kPF) return t - n / 2 >= 0 && t + n / 2 < num_frames;
  return t - n >= 0;
}

Model::Model(ModelKind kind, const ValidatedConfig& cfg) : kind_(kind), cfg_(cfg) {
  const ModelConfig& c = cfg.get();
  const int n = c.context_n;
  switch (kind) {
    case ModelKind::kRbpn:
    case ModelKind::kRbpnMisr: {
      auto fx = nn::build_feature_extractors(cfg);
      feat_l_.emplace(std::move(fx.feat_l));
      if (n >= 1) {
        feat_m_.emplace(std::move(fx.feat_m));
        // The last step's decode would feed nothing, so n = 1 needs no decoder.
        proj_.emplace(cfg, kind == ModelKind::kRbpn && n >= 2);
        rec_.emplace(nn::build_reconstruction(cfg));
      } else {
        sisr_.emplace(nn::build_sisr(cfg));
        rec_.emplace(nn::build_reconstruction(cfg, c.c_h));
      }
      break;
    }
    case ModelKind::kDbpnSisr: {
      auto fx = nn::build_feature_extractors(cfg);
      feat_l_.emplace(std::move(fx.feat_l));
      sisr_.emplace(nn::build_sisr(cfg));
      rec_.emplace(nn::build_reconstruction(cfg, c.c_h));
      break;
    }
    case ModelKind::kDbpnMisr:
      feat_stack_.emplace(nn::build_stacked_extractor(cfg, 3 * (n + 1)));
      sisr_.emplace(nn::build_sisr(cfg));
      rec_.emplace(nn::build_reconstruction(cfg, c.c_h));
      break;
  }
  for (const auto* s : {&feat_l_, &feat_m_, &feat_stack_, &sisr_}) {
    if (*s) params_.insert(params_.end(), (*s)->params().begin(), (*s)->params().end());
  }
  if (proj_) {
    const auto p = proj_->params();
    params_.insert(params_.end(), p.begin(), p.end());
  }
  params_.insert(params_.end(), rec_->params().begin(), rec_->params().end());
}

void Model::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::init_he(params_, rng);
}

void Model::check_inputs(const Frame& target, std::span<const Frame> neighbors,
                         std::span<const flow::FlowField> flows) const {
  const ModelConfig& c = cfg_.get();
  if (target.channels() != 3) throw ShapeError("target must be 3xHxW, got " + to_string(target.shape()));
  if (static_cast<int>(neighbors.size()) != c.context_n) {
    throw ArityError("expected " + std::to_string(c.context_n) + " neighbors, got " + std::to_string(neighbors.size()));
  }
  const bool flows_needed = c.use_flow && (kind_ == ModelKind::kRbpn || kind_ == ModelKind::kRbpnMisr);
  if (!(flows.size() == neighbors.size() || (flows.empty() && !flows_needed))) {
    throw ArityError("expected " + std::to_string(neighbors.size()) + " flow fields, got " +
                     std::to_string(flows.size()));
  }
  for (const Frame& f : neighbors) {
    if (f.shape() != target.shape()) {
      throw ShapeError("neighbor " + to_string(f.shape()) + " does not match target " + to_string(target.shape()));
    }
  }
  for (const auto& f : flows) {
    if (f.height() != target.height() || f.width() != target.width()) {
      throw ShapeError("flow field dims do not match the LR frames");
    }
  }
}

ag::Var Model::neighbor_stack(const Frame& target, const Frame& neighbor, const flow::FlowField* flow) const {
  std::vector<Tensor> parts{target, neighbor};
  if (cfg_->use_flow) {
    parts.push_back(flow != nullptr ? flow::to_tensor(*flow) : Tensor(Shape{2, target.height(), target.width()}));
  }
  return ag::constant(concat_channels(parts));
}

ForwardGraph Model::forward_graph(const Frame& target, std::span<const Frame> neighbors,
                                  std::span<const flow::FlowField> flows, ForwardOptions opts) const {
  check_inputs(target, neighbors, flows);
  const ModelConfig& c = cfg_.get();
  const int n = c.context_n;
  ForwardGraph out;
  ag::Var rec_in;

  if (kind_ == ModelKind::kDbpnMisr) {
    std::vector<Tensor> frames{target};
    frames.insert(frames.end(), neighbors.begin(), neighbors.end());
    ag::Var h = sisr_->forward(feat_stack_->forward(ag::constant(concat_channels(frames))));
    out.per_step_h.push_back(h);
    rec_in = h;
  } else if (sisr_) {
    ag::Var h = sisr_->forward(feat_l_->forward(ag::constant(target)));
    out.per_step_h.push_back(h);
    rec_in = h;
  } else {
    const ag::Var l0 = feat_l_->forward(ag::constant(target));
    ag::Var l = l0;
    for (int k = 0; k < n; ++k) {
      const flow::FlowField* f = flows.empty() ? nullptr : &flows[static_cast<std::size_t>(k)];
      const ag::Var m = feat_m_->forward(neighbor_stack(target, neighbors[static_cast<std::size_t>(k)], f));
      EncodeResult enc = proj_->encode(kind_ == ModelKind::kRbpn ? l : l0, m, opts.residual);
      out.per_step_h.push_back(enc.h);
      if (kind_ == ModelKind::kRbpn && k + 1 < n) l = proj_->decode(enc.h);
    }
    rec_in = c.integration == Integration::kConcat ? ag::concat(out.per_step_h) : out.per_step_h.back();
  }

  out.sr = rec_->forward(rec_in);
  if (c.residual_learning) {
    out.sr = ag::add(out.sr, ag::constant(bicubic_resize(target, c.scale)));
  }
  return out;
}

SRResult Model::forward(const Frame& target, std::span<const Frame> neighbors,
                        std::span<const flow::FlowField> flows, bool keep_steps) const {
  ag::NoGradGuard guard;
  ForwardGraph g = forward_graph(target, neighbors, flows);
  SRResult r;
  r.sr_frame = g.sr.value();
  if (keep_steps) {
    for (const ag::Var& h : g.per_step_h) r.per_step_h.push_back(h.value());
  }
  return r;
}

std::vector<SubnetReport> Model::report(int h, int w) const {
  const int n = cfg_->context_n;
  const int s = cfg_->scale;
  std::vector<SubnetReport> rows;
  const auto add = [&](const nn::Subnet& net, int calls, int in_h, int in_w) {
    rows.push_back({net.name(), net.param_count(), calls, net.flops(in_h, in_w)});
  };
  if (feat_l_) add(*feat_l_, 1, h, w);
  if (feat_stack_) add(*feat_stack_, 1, h, w);
  if (sisr_) add(*sisr_, 1, h, w);
  if (proj_) {
    add(*feat_m_, n, h, w);
    add(proj_->sisr(), n, h, w);
    add(proj_->misr(), n, h, w);
    add(proj_->res(), n, h * s, w * s);
    if (const nn::Subnet* d = proj_->decoder()) add(*d, n - 1, h * s, w * s);
  }
  add(*rec_, 1, h * s, w * s);
  return rows;
}

std::int64_t Model::estimate_flops(int h, int w) const {
  std::int64_t total = 0;
  for (const SubnetReport& r : report(h, w)) total += r.flops_per_call * r.calls;
  return total;
}

void Model::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_archive(dir / "weights.bin", export_params(params_));
  json manifest;
  manifest["format"] = "rbpn-model/1";
  manifest["kind"] = std::string(to_string(kind_));
  json cfg = json::object();
  for (const auto& [k, v] : to_key_values(cfg_.get())) cfg[k] = v;
  manifest["config"] = cfg;
  manifest["config_hash"] = hash_hex(config_hash(cfg_.get()));
  manifest["param_count"] = param_count();
  json tensors = json::array();
  for (const nn::Parameter* p : params_) tensors.push_back({{"name", p->name}, {"shape", p->dims}});
  manifest["tensors"] = tensors;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

Model Model::load(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
  ModelConfig cfg;
  try {
    for (const auto& [k, v] : manifest.at("config").items()) {
      if (!apply_model_key(cfg, k, v.get<std::string>())) throw FormatError("manifest has unknown config key " + k);
    }
    Model m(parse_model_kind(manifest.at("kind").get<std::string>()), validate_config(cfg));
    if (manifest.at("config_hash").get<std::string>() != hash_hex(config_hash(cfg))) {
      throw FormatError("manifest config_hash does not match its config");
    }
    import_params(m.params_, read_archive(dir / "weights.bin"));
    return m;
  } catch (const json::exception& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
}

Model build_model(const ValidatedConfig& cfg, std::uint64_t seed) { return build_baseline(ModelKind::kRbpn, cfg, seed); }

Model build_baseline(ModelKind kind, const ValidatedConfig& cfg, std::uint64_t seed) {
  Model m(kind, cfg);
  m.init(seed);
  return m;
}

}  // namespace rbpn
