#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace rbpn {

// Upscaling ratio. Only 2x, 4x and 8x have resampling geometry.
class ScaleFactor {
 public:
  // Throws ConfigError for anything outside {2, 4, 8}.
  explicit ScaleFactor(int s);
  int value() const noexcept { return s_; }
  friend bool operator==(ScaleFactor, ScaleFactor) = default;

 private:
  int s_;
};

// Kernel/stride/pad of the strided and transposed convolutions that move
// between LR and HR grids.
struct ResampleSpec {
  int kernel = 0;
  int stride = 0;
  int pad = 0;

  // (w - 1) * stride - 2 * pad + kernel
  int up_size(int w) const noexcept { return (w - 1) * stride - 2 * pad + kernel; }
  // floor((w + 2 * pad - kernel) / stride) + 1
  int down_size(int w) const noexcept { return (w + 2 * pad - kernel) / stride + 1; }
  friend bool operator==(const ResampleSpec&, const ResampleSpec&) = default;
};

ResampleSpec resample_spec(ScaleFactor s);

enum class TemporalOrder { kP, kPF, kPR };
enum class Integration { kConcat, kLast };
enum class SizeVariant { kS, kBase, kL };

std::string_view to_string(TemporalOrder o);
std::string_view to_string(Integration i);
std::string_view to_string(SizeVariant v);
TemporalOrder parse_order(std::string_view s);
Integration parse_integration(std::string_view s);
SizeVariant parse_size_variant(std::string_view s);

struct ModelConfig {
  int scale = 4;
  int context_n = 6;
  int c_l = 256;
  int c_m = 256;
  int c_h = 64;
  int sisr_stages = 3;
  int resnet_blocks = 5;
  TemporalOrder order = TemporalOrder::kPF;
  Integration integration = Integration::kConcat;
  bool use_flow = true;
  bool residual_learning = false;
  SizeVariant size_variant = SizeVariant::kBase;

  // Base config with T/B adjusted for the requested size variant.
  static ModelConfig with_variant(SizeVariant v);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// A ModelConfig that has passed validation. Only constructible through
// validate_config, so holding one is proof the invariants hold.
class ValidatedConfig {
 public:
  const ModelConfig& get() const noexcept { return cfg_; }
  const ModelConfig* operator->() const noexcept { return &cfg_; }
  ScaleFactor scale() const { return ScaleFactor(cfg_.scale); }
  ResampleSpec resample() const { return resample_spec(scale()); }

 private:
  friend ValidatedConfig validate_config(const ModelConfig& cfg);
  explicit ValidatedConfig(const ModelConfig& cfg) : cfg_(cfg) {}
  ModelConfig cfg_;
};

// Throws ConfigError naming the first violated invariant.
ValidatedConfig validate_config(const ModelConfig& cfg);

struct TrainConfig {
  int batch_size = 8;
  double lr_initial = 1e-4;
  double lr_decay_factor = 0.1;
  int lr_decay_epoch = 75;
  int total_epochs = 150;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int patch_lr = 64;
  std::uint64_t seed = 0;
  // 0 means one pass over every trainable target frame.
  int steps_per_epoch = 0;
  bool augment = true;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate_train_config(const TrainConfig& cfg);

// Flat `key = value` configuration, '#' starts a comment. Keys are the field
// names above; anything unknown is rejected.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
KeyValues read_key_value_file(const std::string& path);

// Returns false if `key` does not belong to the struct. Throws ConfigError on
// malformed values.
bool apply_model_key(ModelConfig& cfg, const std::string& key, const std::string& value);
bool apply_train_key(TrainConfig& cfg, const std::string& key, const std::string& value);

KeyValues to_key_values(const ModelConfig& cfg);
KeyValues to_key_values(const TrainConfig& cfg);
std::string serialize_key_values(const KeyValues& kv);

// FNV-1a over the canonical key=value serialization.
std::uint64_t config_hash(const ModelConfig& cfg);
std::uint64_t config_hash(const TrainConfig& cfg);
std::string hash_hex(std::uint64_t h);

}  // namespace rbpn
