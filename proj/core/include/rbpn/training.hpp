#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "rbpn/dataset.hpp"
#include "rbpn/model.hpp"

namespace rbpn {

// Mean absolute difference over every element of every pair. ShapeError on
// mismatched counts or shapes.
double l1_loss(std::span<const Tensor> pred, std::span<const Tensor> truth);

// lr_initial before lr_decay_epoch, lr_initial * lr_decay_factor after.
// RangeError outside [0, total_epochs).
double lr_schedule(int epoch, const TrainConfig& cfg);

class Adam {
 public:
  Adam(nn::ParamRefs params, double beta1, double beta2, double eps);

  // Parameters without a gradient are left untouched.
  void step(double lr);
  void zero_grad();

  std::int64_t steps() const noexcept { return t_; }
  const nn::ParamRefs& params() const noexcept { return params_; }
  std::vector<Tensor>& first_moments() noexcept { return m_; }
  std::vector<Tensor>& second_moments() noexcept { return v_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }
  void set_steps(std::int64_t t) noexcept { t_ = t; }

 private:
  nn::ParamRefs params_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct TrainingData {
  std::vector<SequenceRecord> records;
  std::shared_ptr<const flow::FlowProvider> flows;  // required when the model uses flow
};

// Every (record, target) pair with a complete context window.
struct TargetRef {
  int record = 0;
  int target = 0;
};
std::vector<TargetRef> trainable_targets(const TrainingData& data, const ModelConfig& cfg);

struct StepStats {
  int epoch = 0;
  int step_in_epoch = 0;
  std::int64_t global_step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct FitOptions {
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  int checkpoint_every = 1;              // epochs
  std::int64_t max_steps = -1;           // stop early after this many global steps
  std::function<void(const StepStats&)> on_step;
  std::function<void(const std::filesystem::path&)> on_checkpoint;
};

class Trainer {
 public:
  Trainer(Model model, TrainConfig cfg, TrainingData data);

  // One optimizer step on the next batch. Throws DivergenceError when the
  // loss or any gradient turns non-finite.
  StepStats step();
  // Runs until total_epochs (or max_steps). Writes `<dir>/epoch-NNNN`
  // checkpoints when a directory is given.
  void fit(const FitOptions& opts = {});

  // Gradient step on a fixed set of samples, bypassing the data pipeline.
  double step_on(std::span<const TrainSample> batch, double lr);

  Model& model() noexcept { return model_; }
  const Model& model() const noexcept { return model_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  int epoch() const noexcept { return epoch_; }
  int step_in_epoch() const noexcept { return step_in_epoch_; }
  std::int64_t global_step() const noexcept { return global_step_; }
  int steps_per_epoch() const;

  // manifest.json, weights.bin, optim.bin, rng.bin
  void save_checkpoint(const std::filesystem::path& dir) const;
  static Trainer resume(const std::filesystem::path& dir, TrainingData data);

 private:
  std::vector<std::size_t> epoch_order(int epoch) const;
  TrainSample draw_sample(const TargetRef& ref);

  Model model_;
  TrainConfig cfg_;
  TrainingData data_;
  std::vector<TargetRef> targets_;
  Adam adam_;
  std::mt19937_64 rng_;
  int epoch_ = 0;
  int step_in_epoch_ = 0;
  std::int64_t global_step_ = 0;
};

struct OverfitReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
  double sr_psnr = 0.0;       // Y-channel, mean over samples
  double bicubic_psnr = 0.0;  // same samples, bicubic upscale of the LR target
  std::vector<double> losses;
};

// Full-batch Adam on `samples` for `iters` steps at a constant `lr`.
OverfitReport overfit_smoke(Model& model, std::span<const TrainSample> samples, int iters, double lr,
                            const TrainConfig& cfg);

}  // namespace rbpn
