#include "rbpn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rbpn/errors.hpp"

namespace rbpn {

ScaleFactor::ScaleFactor(int s) : s_(s) {
  if (s != 2 && s != 4 && s != 8) {
    throw ConfigError("scale must be one of {2, 4, 8}, got " + std::to_string(s));
  }
}

ResampleSpec resample_spec(ScaleFactor s) {
  switch (s.value()) {
    case 2:
      return {6, 2, 2};
    case 4:
      return {8, 4, 2};
    default:
      return {12, 8, 2};
  }
}

std::string_view to_string(TemporalOrder o) {
  switch (o) {
    case TemporalOrder::kP:
      return "P";
    case TemporalOrder::kPF:
      return "PF";
    case TemporalOrder::kPR:
      return "PR";
  }
  return "?";
}

std::string_view to_string(Integration i) { return i == Integration::kConcat ? "CONCAT" : "LAST"; }

std::string_view to_string(SizeVariant v) {
  switch (v) {
    case SizeVariant::kS:
      return "S";
    case SizeVariant::kBase:
      return "BASE";
    case SizeVariant::kL:
      return "L";
  }
  return "?";
}

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("malformed value for '" + key + "': '" + value + "'");
  }
  return out;
}

template <>
double parse_number<double>(const std::string& key, const std::string& value) {
  // from_chars for double is unavailable on older libstdc++.
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("malformed value for '" + key + "': '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = upper(value);
  if (v == "1" || v == "TRUE" || v == "YES" || v == "ON") return true;
  if (v == "0" || v == "FALSE" || v == "NO" || v == "OFF") return false;
  throw ConfigError("malformed boolean for '" + key + "': '" + value + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TemporalOrder parse_order(std::string_view s) {
  const std::string u = upper(s);
  if (u == "P") return TemporalOrder::kP;
  if (u == "PF") return TemporalOrder::kPF;
  if (u == "PR") return TemporalOrder::kPR;
  throw ConfigError("unknown temporal order '" + std::string(s) + "' (expected P, PF or PR)");
}

Integration parse_integration(std::string_view s) {
  const std::string u = upper(s);
  if (u == "CONCAT") return Integration::kConcat;
  if (u == "LAST") return Integration::kLast;
  throw ConfigError("unknown integration '" + std::string(s) + "' (expected CONCAT or LAST)");
}

SizeVariant parse_size_variant(std::string_view s) {
  const std::string u = upper(s);
  if (u == "S") return SizeVariant::kS;
  if (u == "BASE") return SizeVariant::kBase;
  if (u == "L") return SizeVariant::kL;
  throw ConfigError("unknown size variant '" + std::string(s) + "' (expected S, BASE or L)");
}

ModelConfig ModelConfig::with_variant(SizeVariant v) {
  ModelConfig cfg;
  cfg.size_variant = v;
  if (v == SizeVariant::kS) {
    cfg.resnet_blocks = 3;
    cfg.sisr_stages = 2;
  } else if (v == SizeVariant::kL) {
    cfg.sisr_stages = 6;
  }
  return cfg;
}

ValidatedConfig validate_config(const ModelConfig& cfg) {
  ScaleFactor{cfg.scale};
  if (cfg.context_n < 0) throw ConfigError("context_n must be >= 0");
  if (cfg.c_l < 1 || cfg.c_m < 1 || cfg.c_h < 1) throw ConfigError("channel counts must be >= 1");
  if (cfg.sisr_stages < 1) throw ConfigError("sisr_stages must be >= 1");
  if (cfg.resnet_blocks < 1) throw ConfigError("resnet_blocks must be >= 1");
  if (cfg.order == TemporalOrder::kPF && cfg.context_n % 2 != 0) {
    throw ConfigError("order/parity: PF needs an even context_n, got " + std::to_string(cfg.context_n));
  }
  if (cfg.size_variant == SizeVariant::kS && (cfg.resnet_blocks != 3 || cfg.sisr_stages != 2)) {
    throw ConfigError("size_variant S requires resnet_blocks=3 and sisr_stages=2");
  }
  if (cfg.size_variant == SizeVariant::kL && cfg.sisr_stages != 6) {
    throw ConfigError("size_variant L requires sisr_stages=6");
  }
  return ValidatedConfig(cfg);
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.lr_initial >= 0.0)) throw ConfigError("lr_initial must be >= 0");
  if (!(cfg.lr_decay_factor > 0.0)) throw ConfigError("lr_decay_factor must be > 0");
  if (cfg.total_epochs < 1) throw ConfigError("total_epochs must be >= 1");
  if (cfg.lr_decay_epoch < 0) throw ConfigError("lr_decay_epoch must be >= 0");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in [0,1)");
  if (!(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in [0,1)");
  if (!(cfg.adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (cfg.patch_lr < 1) throw ConfigError("patch_lr must be >= 1");
  if (cfg.steps_per_epoch < 0) throw ConfigError("steps_per_epoch must be >= 0");
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

KeyValues read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

bool apply_model_key(ModelConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "scale") {
    cfg.scale = parse_number<int>(key, value);
  } else if (key == "context_n") {
    cfg.context_n = parse_number<int>(key, value);
  } else if (key == "c_l") {
    cfg.c_l = parse_number<int>(key, value);
  } else if (key == "c_m") {
    cfg.c_m = parse_number<int>(key, value);
  } else if (key == "c_h") {
    cfg.c_h = parse_number<int>(key, value);
  } else if (key == "sisr_stages") {
    cfg.sisr_stages = parse_number<int>(key, value);
  } else if (key == "resnet_blocks") {
    cfg.resnet_blocks = parse_number<int>(key, value);
  } else if (key == "order") {
    cfg.order = parse_order(value);
  } else if (key == "integration") {
    cfg.integration = parse_integration(value);
  } else if (key == "use_flow") {
    cfg.use_flow = parse_bool(key, value);
  } else if (key == "residual_learning") {
    cfg.residual_learning = parse_bool(key, value);
  } else if (key == "size_variant") {
    cfg.size_variant = parse_size_variant(value);
  } else {
    return false;
  }
  return true;
}

bool apply_train_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "batch_size") {
    cfg.batch_size = parse_number<int>(key, value);
  } else if (key == "lr_initial") {
    cfg.lr_initial = parse_number<double>(key, value);
  } else if (key == "lr_decay_factor") {
    cfg.lr_decay_factor = parse_number<double>(key, value);
  } else if (key == "lr_decay_epoch") {
    cfg.lr_decay_epoch = parse_number<int>(key, value);
  } else if (key == "total_epochs") {
    cfg.total_epochs = parse_number<int>(key, value);
  } else if (key == "adam_beta1") {
    cfg.adam_beta1 = parse_number<double>(key, value);
  } else if (key == "adam_beta2") {
    cfg.adam_beta2 = parse_number<double>(key, value);
  } else if (key == "adam_eps") {
    cfg.adam_eps = parse_number<double>(key, value);
  } else if (key == "patch_lr") {
    cfg.patch_lr = parse_number<int>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "steps_per_epoch") {
    cfg.steps_per_epoch = parse_number<int>(key, value);
  } else if (key == "augment") {
    cfg.augment = parse_bool(key, value);
  } else {
    return false;
  }
  return true;
}

KeyValues to_key_values(const ModelConfig& cfg) {
  return {
      {"scale", std::to_string(cfg.scale)},
      {"context_n", std::to_string(cfg.context_n)},
      {"c_l", std::to_string(cfg.c_l)},
      {"c_m", std::to_string(cfg.c_m)},
      {"c_h", std::to_string(cfg.c_h)},
      {"sisr_stages", std::to_string(cfg.sisr_stages)},
      {"resnet_blocks", std::to_string(cfg.resnet_blocks)},
      {"order", std::string(to_string(cfg.order))},
      {"integration", std::string(to_string(cfg.integration))},
      {"use_flow", cfg.use_flow ? "true" : "false"},
      {"residual_learning", cfg.residual_learning ? "true" : "false"},
      {"size_variant", std::string(to_string(cfg.size_variant))},
  };
}

KeyValues to_key_values(const TrainConfig& cfg) {
  return {
      {"batch_size", std::to_string(cfg.batch_size)},
      {"lr_initial", format_double(cfg.lr_initial)},
      {"lr_decay_factor", format_double(cfg.lr_decay_factor)},
      {"lr_decay_epoch", std::to_string(cfg.lr_decay_epoch)},
      {"total_epochs", std::to_string(cfg.total_epochs)},
      {"adam_beta1", format_double(cfg.adam_beta1)},
      {"adam_beta2", format_double(cfg.adam_beta2)},
      {"adam_eps", format_double(cfg.adam_eps)},
      {"patch_lr", std::to_string(cfg.patch_lr)},
      {"seed", std::to_string(cfg.seed)},
      {"steps_per_epoch", std::to_string(cfg.steps_per_epoch)},
      {"augment", cfg.augment ? "true" : "false"},
  };
}

std::string serialize_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

namespace {
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

std::uint64_t config_hash(const ModelConfig& cfg) { return fnv1a(serialize_key_values(to_key_values(cfg))); }
std::uint64_t config_hash(const TrainConfig& cfg) { return fnv1a(serialize_key_values(to_key_values(cfg))); }

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rbpn
