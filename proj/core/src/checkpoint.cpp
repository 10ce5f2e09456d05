#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rbpn/archive.hpp"
#include "rbpn/errors.hpp"
#include "rbpn/training.hpp"

namespace rbpn {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json kv_object(const KeyValues& kv) {
  json o = json::object();
  for (const auto& [k, v] : kv) o[k] = v;
  return o;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void Trainer::save_checkpoint(const fs::path& dir) const {
  fs::create_directories(dir);
  const nn::ParamRefs& params = model_.params();
  write_archive(dir / "weights.bin", export_params(params));

  std::vector<std::pair<std::string, Tensor>> optim;
  for (std::size_t i = 0; i < params.size(); ++i) {
    optim.emplace_back("value/" + params[i]->name, params[i]->var.value());
    optim.emplace_back("m/" + params[i]->name, adam_.first_moments()[i]);
    optim.emplace_back("v/" + params[i]->name, adam_.second_moments()[i]);
  }
  write_double_blob(dir / "optim.bin", optim);

  {
    std::ofstream rng(dir / "rng.bin");
    if (!rng) throw IoError("cannot write " + (dir / "rng.bin").string());
    rng << rng_ << "\n";
  }

  json m;
  m["format"] = "rbpn-checkpoint/1";
  m["kind"] = std::string(to_string(model_.kind()));
  m["model_config"] = kv_object(to_key_values(model_.config()));
  m["model_config_hash"] = hash_hex(config_hash(model_.config()));
  m["train_config"] = kv_object(to_key_values(cfg_));
  m["train_config_hash"] = hash_hex(config_hash(cfg_));
  m["epoch"] = epoch_;
  m["step_in_epoch"] = step_in_epoch_;
  m["global_step"] = global_step_;
  m["adam_steps"] = adam_.steps();
  m["param_count"] = model_.param_count();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << "\n";
}

Trainer Trainer::resume(const fs::path& dir, TrainingData data) {
  const json m = read_json(dir / "manifest.json");
  try {
    if (m.at("format").get<std::string>() != "rbpn-checkpoint/1") {
      throw FormatError(dir.string() + " is not a training checkpoint");
    }
    ModelConfig mc;
    for (const auto& [k, v] : m.at("model_config").items()) {
      if (!apply_model_key(mc, k, v.get<std::string>())) throw FormatError("checkpoint has unknown model key " + k);
    }
    TrainConfig tc;
    for (const auto& [k, v] : m.at("train_config").items()) {
      if (!apply_train_key(tc, k, v.get<std::string>())) throw FormatError("checkpoint has unknown train key " + k);
    }
    if (m.at("model_config_hash").get<std::string>() != hash_hex(config_hash(mc)) ||
        m.at("train_config_hash").get<std::string>() != hash_hex(config_hash(tc))) {
      throw FormatError("checkpoint config hashes do not match its configs");
    }
    Model model(parse_model_kind(m.at("kind").get<std::string>()), validate_config(mc));
    Trainer tr(std::move(model), tc, std::move(data));

    std::map<std::string, Tensor> blob;
    for (auto& [name, t] : read_double_blob(dir / "optim.bin")) blob.emplace(name, std::move(t));
    const nn::ParamRefs& params = tr.model_.params();
    const auto fetch = [&](const std::string& key, const Shape& shape) -> Tensor& {
      const auto it = blob.find(key);
      if (it == blob.end()) throw FormatError("optim.bin is missing " + key);
      if (it->second.shape() != shape) throw FormatError("optim.bin entry " + key + " has the wrong shape");
      return it->second;
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Shape s = params[i]->var.shape();
      params[i]->var.mutable_value() = fetch("value/" + params[i]->name, s);
      tr.adam_.first_moments()[i] = fetch("m/" + params[i]->name, s);
      tr.adam_.second_moments()[i] = fetch("v/" + params[i]->name, s);
    }
    tr.adam_.set_steps(m.at("adam_steps").get<std::int64_t>());
    tr.epoch_ = m.at("epoch").get<int>();
    tr.step_in_epoch_ = m.at("step_in_epoch").get<int>();
    tr.global_step_ = m.at("global_step").get<std::int64_t>();

    std::ifstream rng(dir / "rng.bin");
    if (!rng || !(rng >> tr.rng_)) throw FormatError("cannot restore RNG state from " + (dir / "rng.bin").string());
    return tr;
  } catch (const json::exception& e) {
    throw FormatError((dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace rbpn
