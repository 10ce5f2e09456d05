#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rbpn/dataset.hpp"
#include "rbpn/metrics.hpp"
#include "rbpn/training.hpp"

namespace rbpn {

struct EvalProtocol {
  std::string name;
  int border_crop = 0;
  int trim_head = 0;
  int trim_tail = 0;
};

EvalProtocol protocol_a();  // crop 8, drop first 6 and last 3 frames
EvalProtocol protocol_b();  // no crop, drop first and last 2 frames
EvalProtocol parse_protocol(std::string_view name);

// Frame indices a protocol scores, restricted to targets whose context
// window lies inside the clip.
std::vector<int> evaluated_frames(const EvalProtocol& p, int num_frames, int context_n, TemporalOrder order);

// Something that super-resolves one target frame given its context.
struct EvalMethod {
  std::string name;
  int scale = 4;
  int context_n = 0;
  TemporalOrder order = TemporalOrder::kP;
  bool needs_flow = false;
  std::uint64_t seed = 0;  // PR permutation seed
  std::function<Frame(const Frame& target, std::span<const Frame> neighbors,
                      std::span<const flow::FlowField> flows)>
      run;
};

EvalMethod bicubic_method(int scale);
// The model is referenced, not copied; it must outlive the method.
EvalMethod model_method(const Model& model, std::string name, std::uint64_t seed = 0);

struct MetricRecord {
  std::string sequence;
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::string protocol;
  std::string tier;  // empty when not stratified
};

struct Aggregate {
  std::string label;
  int frames = 0;
  int sequences = 0;
  double psnr = 0.0;  // mean of per-sequence means (per-frame mean for a sequence row)
  double ssim = 0.0;
  double psnr_frame_weighted = 0.0;
  double ssim_frame_weighted = 0.0;
};

struct EvalReport {
  std::string method;
  EvalProtocol protocol;
  std::vector<MetricRecord> frames;
  std::vector<Aggregate> sequences;
  std::vector<Aggregate> tiers;  // slow, medium, fast (only populated ones)
  Aggregate overall;
  std::map<std::string, double> motion;  // mean LR flow magnitude per sequence
};

struct EvalOptions {
  const flow::FlowProvider* flows = nullptr;  // required when the method or tiers need flow
  std::optional<flow::TierThresholds> tiers;  // stratify by motion when set
  std::function<void(const MetricRecord&)> on_frame;
};

// Mean magnitude of the flows from frame t-1 to t over the whole clip.
double sequence_motion(const SequenceRecord& rec, int scale, const flow::FlowProvider& flows);

// Output is quantized to 8 bits before scoring, as a saved PNG would be.
// Errors are rethrown with the sequence id in the message.
EvalReport evaluate_dataset(const EvalMethod& method, const std::vector<SequenceRecord>& records,
                            const EvalProtocol& protocol, const EvalOptions& opts = {});

void write_csv(const EvalReport& r, std::ostream& out);
std::string to_json(const EvalReport& r);
// Sequence rows, then tier rows, then Average; PSNR/SSIM columns.
std::string format_table(const EvalReport& r);

// ---- ablation -------------------------------------------------------------

// Values per axis; an empty axis keeps the base config value.
struct AblationGrid {
  std::vector<int> context_n;
  std::vector<TemporalOrder> order;
  std::vector<bool> use_flow;
  std::vector<Integration> integration;
  std::vector<SizeVariant> size_variant;
  std::vector<bool> residual_learning;
};

struct AblationCell {
  ModelConfig config;
  bool ok = false;
  std::string error;
  double psnr = 0.0;
  double ssim = 0.0;
  double final_loss = 0.0;
  std::int64_t params = 0;
};

struct AblationSetup {
  ModelConfig base;
  TrainConfig train;
  std::int64_t train_steps = 200;
  std::vector<SequenceRecord> train_records;
  std::vector<SequenceRecord> test_records;
  std::shared_ptr<const flow::FlowProvider> flows;
  EvalProtocol protocol;
  std::uint64_t seed = 0;
};

// Cartesian product of the grid. Variant cells keep the base channel widths
// and only take the variant's stage/block counts.
std::vector<ModelConfig> expand_grid(const ModelConfig& base, const AblationGrid& grid);

// Trains every cell with the same seed and step budget, evaluates it under
// the setup's protocol. A failing cell is recorded and the sweep continues.
std::vector<AblationCell> run_ablation(const AblationSetup& setup, const AblationGrid& grid,
                                       const std::function<void(const AblationCell&)>& on_cell = {});

std::string format_ablation_table(const std::vector<AblationCell>& cells);
std::string ablation_json(const std::vector<AblationCell>& cells);

// ---- plots (SVG) ------------------------------------------------------------

struct SeriesPoint {
  double x = 0.0;
  double y = 0.0;
};

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<std::pair<std::string, std::vector<SeriesPoint>>>& series);
std::string bar_plot_svg(const std::string& title, const std::string& y_label,
                         const std::vector<std::pair<std::string, double>>& bars);

// PSNR against context length, one line per (order, flow, integration) group.
std::string context_curve_svg(const std::vector<AblationCell>& cells);
std::string tier_bars_svg(const EvalReport& r);

}  // namespace rbpn
