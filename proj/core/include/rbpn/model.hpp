#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbpn/flow.hpp"
#include "rbpn/image.hpp"
#include "rbpn/projection.hpp"

namespace rbpn {

enum class ModelKind {
  kRbpn,      // full recurrent projection network
  kDbpnSisr,  // target frame only
  kDbpnMisr,  // all frames stacked on channels, one SISR pass
  kRbpnMisr,  // projection per neighbor, no decoder (no temporal chain)
};

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct ContextPlan {
  int target = 0;
  std::vector<int> neighbors;  // in processing order
  TemporalOrder order = TemporalOrder::kP;
};

// P: t-1, ..., t-n. PF: t-1, t+1, t-2, t+2, ... (n/2 each side).
// PR: the P set shuffled by `seed`. Throws RangeError if any index falls
// outside [0, num_frames).
ContextPlan plan_context(int t, int n, TemporalOrder order, std::uint64_t seed, int num_frames);

// Same ordering, but out-of-range neighbors are replaced by the nearest
// existing frame; `replicated[i]` marks those (they should get zero flow).
struct ClampedPlan {
  ContextPlan plan;
  std::vector<bool> replicated;
};
ClampedPlan plan_context_clamped(int t, int n, TemporalOrder order, std::uint64_t seed, int num_frames);

bool has_full_context(int t, int n, TemporalOrder order, int num_frames);

struct ForwardOptions {
  ResidualMode residual = ResidualMode::kLearned;
};

struct ForwardGraph {
  ag::Var sr;
  std::vector<ag::Var> per_step_h;
};

struct SRResult {
  Frame sr_frame;
  std::vector<Tensor> per_step_h;
};

struct SubnetReport {
  std::string name;
  std::int64_t params = 0;
  int calls = 0;                   // invocations per forward pass
  std::int64_t flops_per_call = 0;
};

class Model {
 public:
  // Parameters are zero until init() or load().
  Model(ModelKind kind, const ValidatedConfig& cfg);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  void init(std::uint64_t seed);

  // target: 3 x h x w. neighbors: n frames of the same size, in plan order.
  // flows: n fields of h x w (may be empty when use_flow is off).
  ForwardGraph forward_graph(const Frame& target, std::span<const Frame> neighbors,
                             std::span<const flow::FlowField> flows, ForwardOptions opts = {}) const;
  // Inference without recording a graph.
  SRResult forward(const Frame& target, std::span<const Frame> neighbors, std::span<const flow::FlowField> flows,
                   bool keep_steps = false) const;

  ModelKind kind() const noexcept { return kind_; }
  const ModelConfig& config() const noexcept { return cfg_.get(); }
  const ValidatedConfig& validated() const noexcept { return cfg_; }

  const nn::ParamRefs& params() const noexcept { return params_; }
  std::int64_t param_count() const { return nn::count_params(params_); }
  // Total 2 x multiply-adds of one forward pass at LR input h x w.
  std::int64_t estimate_flops(int h, int w) const;
  std::vector<SubnetReport> report(int h, int w) const;

  const ProjectionModule* projection() const noexcept { return proj_ ? &*proj_ : nullptr; }

  // <dir>/manifest.json + <dir>/weights.bin
  void save(const std::filesystem::path& dir) const;
  static Model load(const std::filesystem::path& dir);

 private:
  void check_inputs(const Frame& target, std::span<const Frame> neighbors,
                    std::span<const flow::FlowField> flows) const;
  ag::Var neighbor_stack(const Frame& target, const Frame& neighbor, const flow::FlowField* flow) const;

  ModelKind kind_;
  ValidatedConfig cfg_;
  std::optional<nn::Subnet> feat_l_;
  std::optional<nn::Subnet> feat_m_;
  std::optional<nn::Subnet> feat_stack_;
  std::optional<nn::Subnet> sisr_;  // SISR-only paths (DBPN kinds, n = 0)
  std::optional<ProjectionModule> proj_;
  std::optional<nn::Subnet> rec_;
  nn::ParamRefs params_;
};

Model build_model(const ValidatedConfig& cfg, std::uint64_t seed);
Model build_baseline(ModelKind kind, const ValidatedConfig& cfg, std::uint64_t seed);

}  // namespace rbpn
