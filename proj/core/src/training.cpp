#include "rbpn/training.hpp"

#include <cmath>
#include <cstdio>

#include "rbpn/errors.hpp"
#include "rbpn/metrics.hpp"
#include "rbpn/resize.hpp"

namespace rbpn {

double l1_loss(std::span<const Tensor> pred, std::span<const Tensor> truth) {
  if (pred.size() != truth.size()) throw ShapeError("l1_loss: batch sizes differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].shape() != truth[i].shape()) {
      throw ShapeError("l1_loss: " + to_string(pred[i].shape()) + " vs " + to_string(truth[i].shape()));
    }
    for (std::size_t j = 0; j < pred[i].numel(); ++j) sum += std::abs(pred[i][j] - truth[i][j]);
    count += pred[i].numel();
  }
  if (count == 0) throw EmptyInputError("l1_loss of an empty batch");
  return sum / static_cast<double>(count);
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.total_epochs) {
    throw RangeError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(cfg.total_epochs) + ")");
  }
  return epoch < cfg.lr_decay_epoch ? cfg.lr_initial : cfg.lr_initial * cfg.lr_decay_factor;
}

Adam::Adam(nn::ParamRefs params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const nn::Parameter* p : params_) {
    m_.emplace_back(p->var.shape());
    v_.emplace_back(p->var.shape());
  }
}

void Adam::zero_grad() {
  for (nn::Parameter* p : params_) p->var.zero_grad();
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    nn::Parameter* p = params_[i];
    if (!p->var.has_grad()) continue;
    const Tensor& g = p->var.grad();
    Tensor& w = p->var.mutable_value();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < w.numel(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

namespace {

// Accumulates d(mean per-sample L1)/d(params) and returns the batch loss.
double accumulate_grads(const Model& model, std::span<const TrainSample> batch) {
  if (batch.empty()) throw EmptyInputError("empty training batch");
  const double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const TrainSample& s : batch) {
    const ForwardGraph g = model.forward_graph(s.lr_target, s.lr_neighbors, s.flows);
    const ag::Var loss = ag::l1_loss(g.sr, s.hr_target);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) throw DivergenceError("training loss became non-finite");
    total += value;
    ag::backward(loss, Tensor(Shape{1, 1, 1}, weight));
  }
  for (const nn::Parameter* p : model.params()) {
    if (p->var.has_grad() && !p->var.grad().all_finite()) {
      throw DivergenceError("non-finite gradient in " + p->name);
    }
  }
  return total * weight;
}

double batch_loss(const Model& model, std::span<const TrainSample> batch) {
  std::vector<Tensor> pred;
  std::vector<Tensor> truth;
  for (const TrainSample& s : batch) {
    pred.push_back(model.forward(s.lr_target, s.lr_neighbors, s.flows).sr_frame);
    truth.push_back(s.hr_target);
  }
  // Per-sample means averaged, matching the training objective.
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += l1_loss(std::span(&pred[i], 1), std::span(&truth[i], 1));
  return total / static_cast<double>(pred.size());
}

}  // namespace

std::vector<TargetRef> trainable_targets(const TrainingData& data, const ModelConfig& cfg) {
  std::vector<TargetRef> out;
  for (std::size_t r = 0; r < data.records.size(); ++r) {
    const int frames = data.records[r].size();
    for (int t = 0; t < frames; ++t) {
      if (has_full_context(t, cfg.context_n, cfg.order, frames)) out.push_back({static_cast<int>(r), t});
    }
  }
  return out;
}

Trainer::Trainer(Model model, TrainConfig cfg, TrainingData data)
    : model_(std::move(model)),
      cfg_(cfg),
      data_(std::move(data)),
      targets_(trainable_targets(data_, model_.config())),
      adam_(model_.params(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps),
      rng_(cfg.seed) {
  validate_train_config(cfg_);
  if (targets_.empty()) throw EmptyInputError("no training target has a full context window");
  if (model_.config().use_flow && !data_.flows) throw ConfigError("the model uses flow but no flow provider was given");
}

int Trainer::steps_per_epoch() const {
  if (cfg_.steps_per_epoch > 0) return cfg_.steps_per_epoch;
  const auto n = static_cast<int>(targets_.size());
  return (n + cfg_.batch_size - 1) / cfg_.batch_size;
}

std::vector<std::size_t> Trainer::epoch_order(int epoch) const {
  std::vector<std::size_t> order(targets_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 eng(cfg_.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[eng() % i]);
  return order;
}

TrainSample Trainer::draw_sample(const TargetRef& ref) {
  const ModelConfig& mc = model_.config();
  const SequenceRecord& rec = data_.records[static_cast<std::size_t>(ref.record)];
  const std::uint64_t plan_seed = rng_();
  const ContextPlan plan = plan_context(ref.target, mc.context_n, mc.order, plan_seed, rec.size());
  const SequenceView view(rec, mc.scale);
  TrainSample s = make_sample(view, plan, mc.use_flow ? data_.flows.get() : nullptr);
  if (cfg_.patch_lr > 0) s = sample_patch(s, cfg_.patch_lr, mc.scale, rng_);
  if (cfg_.augment) s = augment(s, random_augment_ops(rng_));
  return s;
}

double Trainer::step_on(std::span<const TrainSample> batch, double lr) {
  adam_.zero_grad();
  const double loss = accumulate_grads(model_, batch);
  adam_.step(lr);
  return loss;
}

StepStats Trainer::step() {
  if (epoch_ >= cfg_.total_epochs) throw RangeError("training already finished all epochs");
  const std::vector<std::size_t> order = epoch_order(epoch_);
  std::vector<TrainSample> batch;
  for (int j = 0; j < cfg_.batch_size; ++j) {
    const std::size_t slot = (static_cast<std::size_t>(step_in_epoch_) * cfg_.batch_size + j) % order.size();
    batch.push_back(draw_sample(targets_[order[slot]]));
  }
  StepStats stats{epoch_, step_in_epoch_, global_step_, 0.0, lr_schedule(epoch_, cfg_)};
  stats.loss = step_on(batch, stats.lr);
  ++global_step_;
  if (++step_in_epoch_ >= steps_per_epoch()) {
    step_in_epoch_ = 0;
    ++epoch_;
  }
  return stats;
}

void Trainer::fit(const FitOptions& opts) {
  while (epoch_ < cfg_.total_epochs) {
    if (opts.max_steps >= 0 && global_step_ >= opts.max_steps) break;
    const StepStats stats = step();
    if (opts.on_step) opts.on_step(stats);
    if (step_in_epoch_ == 0 && !opts.checkpoint_dir.empty() && opts.checkpoint_every > 0 &&
        epoch_ % opts.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch-%04d", epoch_);
      const std::filesystem::path dir = opts.checkpoint_dir / name;
      save_checkpoint(dir);
      if (opts.on_checkpoint) opts.on_checkpoint(dir);
    }
  }
}

OverfitReport overfit_smoke(Model& model, std::span<const TrainSample> samples, int iters, double lr,
                            const TrainConfig& cfg) {
  if (samples.empty()) throw EmptyInputError("overfit_smoke needs at least one sample");
  if (iters < 0) throw RangeError("iteration count must be >= 0");
  Adam adam(model.params(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  OverfitReport r;
  for (int i = 0; i < iters; ++i) {
    adam.zero_grad();
    const double loss = accumulate_grads(model, samples);
    r.losses.push_back(loss);
    adam.step(lr);
  }
  adam.zero_grad();
  r.iterations = iters;
  r.final_loss = batch_loss(model, samples);
  r.initial_loss = r.losses.empty() ? r.final_loss : r.losses.front();
  const int scale = model.config().scale;
  for (const TrainSample& s : samples) {
    const Frame sr = clip01(model.forward(s.lr_target, s.lr_neighbors, s.flows).sr_frame);
    const Frame bic = clip01(bicubic_resize(s.lr_target, scale));
    r.sr_psnr += psnr_y(sr, s.hr_target);
    r.bicubic_psnr += psnr_y(bic, s.hr_target);
  }
  r.sr_psnr /= static_cast<double>(samples.size());
  r.bicubic_psnr /= static_cast<double>(samples.size());
  return r;
}

}  // namespace rbpn
