#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rbpn/dataset.hpp"
#include "rbpn/errors.hpp"
#include "rbpn/evaluation.hpp"
#include "rbpn/model.hpp"
#include "rbpn/synthetic.hpp"
#include "rbpn/training.hpp"

namespace rbpn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

// Every ModelConfig / TrainConfig field as `--field-name`, layered over an
// optional key=value config file.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> model_overrides;
  std::map<std::string, std::string> train_overrides;

  void attach(CLI::App& app, bool with_train) {
    app.add_option("--config", config_file, "key = value config file; flags override it");
    for (const auto& [key, value] : to_key_values(ModelConfig{})) {
      app.add_option_function<std::string>(
          "--" + dashed(key), [this, k = key](const std::string& v) { model_overrides[k] = v; },
          "model: " + key + " (default " + value + ")");
    }
    if (!with_train) return;
    for (const auto& [key, value] : to_key_values(TrainConfig{})) {
      app.add_option_function<std::string>(
          "--" + dashed(key), [this, k = key](const std::string& v) { train_overrides[k] = v; },
          "train: " + key + " (default " + value + ")");
    }
  }

  KeyValues file_values() const { return config_file.empty() ? KeyValues{} : read_key_value_file(config_file); }

  ModelConfig model(const ModelConfig& base = {}) const {
    KeyValues kv = file_values();
    for (const auto& [k, v] : model_overrides) kv[k] = v;
    ModelConfig cfg = base;
    // A size variant brings its own stage/block counts unless set explicitly.
    if (const auto it = kv.find("size_variant"); it != kv.end()) {
      const ModelConfig v = ModelConfig::with_variant(parse_size_variant(it->second));
      cfg.size_variant = v.size_variant;
      cfg.sisr_stages = v.sisr_stages;
      cfg.resnet_blocks = v.resnet_blocks;
    }
    TrainConfig scratch;
    for (const auto& [k, v] : kv) {
      if (!apply_model_key(cfg, k, v) && !apply_train_key(scratch, k, v)) {
        throw ConfigError("unknown config key '" + k + "'");
      }
    }
    return cfg;
  }

  TrainConfig train(const TrainConfig& base = {}) const {
    KeyValues kv = file_values();
    for (const auto& [k, v] : train_overrides) kv[k] = v;
    TrainConfig cfg = base;
    ModelConfig scratch;
    for (const auto& [k, v] : kv) {
      if (!apply_train_key(cfg, k, v) && !apply_model_key(scratch, k, v)) {
        throw ConfigError("unknown config key '" + k + "'");
      }
    }
    validate_train_config(cfg);
    return cfg;
  }

};

struct DataFlags {
  std::string kind = "framedir";
  std::string root;
  std::string list_file;
  int syn_sequences = 4;
  int syn_frames = 7;
  int syn_size = 64;
  std::uint64_t syn_seed = 1;
  double syn_speed = 2.0;

  void attach(CLI::App& app) {
    app.add_option("--dataset", kind, "vimeo90k | framedir | synthetic")->capture_default_str();
    app.add_option("--dataset-root", root, "Dataset root (default $RBPN_DATASET_ROOT)");
    app.add_option("--list-file", list_file, "Vimeo-90k clip list (default <root>/sep_testlist.txt)");
    app.add_option("--synthetic-sequences", syn_sequences, "Synthetic clips")->capture_default_str();
    app.add_option("--synthetic-frames", syn_frames, "Frames per synthetic clip")->capture_default_str();
    app.add_option("--synthetic-size", syn_size, "Synthetic HR frame size (square)")->capture_default_str();
    app.add_option("--synthetic-seed", syn_seed, "Synthetic generator seed")->capture_default_str();
    app.add_option("--synthetic-speed", syn_speed, "Max synthetic motion, LR px/frame")->capture_default_str();
  }

  DatasetKind parsed_kind() const { return parse_dataset_kind(kind); }

  SyntheticSpec synthetic_spec(int scale) const {
    SyntheticSpec s;
    s.sequences = syn_sequences;
    s.frames = syn_frames;
    s.hr_height = syn_size;
    s.hr_width = syn_size;
    s.scale = scale;
    s.seed = syn_seed;
    s.max_speed = syn_speed;
    return s;
  }

  fs::path resolved_root() const {
    if (!root.empty()) return root;
    if (const char* env = std::getenv("RBPN_DATASET_ROOT"); env != nullptr && *env != '\0') return env;
    throw ConfigError("no dataset root: pass --dataset-root or set RBPN_DATASET_ROOT");
  }
};

struct FlowFlags {
  std::string source = "auto";
  std::string dir;
  std::string command;

  void attach(CLI::App& app) {
    app.add_option("--flow", source, "auto | zero | dir | cmd")->capture_default_str();
    app.add_option("--flows-dir", dir, "Precomputed <seq>/<t>_<k>.flo tree");
    app.add_option("--flow-cmd", command, "External estimator: CMD neighbor.png target.png out.flo");
  }
};

// Records plus the flow provider that matches them.
struct Loaded {
  std::vector<SequenceRecord> records;
  std::shared_ptr<const flow::FlowProvider> flows;
  bool synthetic = false;
};

Loaded load(const DataFlags& d, const FlowFlags& f, int scale, int min_frames) {
  Loaded out;
  std::shared_ptr<flow::InMemoryFlowProvider> synthetic_flows;
  if (d.parsed_kind() == DatasetKind::kSynthetic) {
    SyntheticSet set = make_synthetic(d.synthetic_spec(scale));
    out.records = std::move(set.records);
    synthetic_flows = set.flows;
    out.synthetic = true;
    for (const auto& r : out.records) {
      if (r.size() < min_frames) throw EmptySequenceError("synthetic clips are shorter than the context");
    }
  } else {
    const std::optional<fs::path> list = d.list_file.empty() ? std::nullopt : std::optional<fs::path>(d.list_file);
    out.records = load_dataset(d.parsed_kind(), d.resolved_root(), list, min_frames);
  }

  std::string source = f.source;
  if (source == "auto") {
    source = synthetic_flows ? "synthetic" : !f.dir.empty() ? "dir" : !f.command.empty() ? "cmd" : "zero";
  }
  if (source == "synthetic") {
    if (!synthetic_flows) throw ConfigError("--flow synthetic only applies to the synthetic dataset");
    out.flows = synthetic_flows;
  } else if (source == "zero") {
    out.flows = std::make_shared<flow::ZeroFlowProvider>();
  } else if (source == "dir") {
    if (f.dir.empty()) throw ConfigError("--flow dir needs --flows-dir");
    out.flows = std::make_shared<flow::PrecomputedDirProvider>(f.dir);
  } else if (source == "cmd") {
    if (f.command.empty()) throw ConfigError("--flow cmd needs --flow-cmd");
    auto index = std::make_shared<std::map<std::string, const SequenceRecord*>>();
    auto records = std::make_shared<std::vector<SequenceRecord>>(out.records);
    for (const auto& r : *records) (*index)[r.id] = &r;
    out.flows = std::make_shared<flow::ExternalCmdProvider>(
        f.command, [records, index, scale](const std::string& seq, int i) {
          const auto it = index->find(seq);
          if (it == index->end()) throw MissingFlowError("unknown sequence '" + seq + "'");
          return quantize_8bit(degrade(modcrop(load_hr_frame(*it->second, i), scale), scale));
        });
  } else {
    throw ConfigError("unknown flow source '" + f.source + "'");
  }
  return out;
}

std::string thousands(std::int64_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > (v < 0 ? 1 : 0); i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---- inspect -------------------------------------------------------------

int cmd_inspect(const ConfigFlags& cf, const std::string& kind, int h, int w, bool as_json, std::ostream& out) {
  const Model m(parse_model_kind(kind), validate_config(cf.model()));
  const auto rows = m.report(h, w);
  if (as_json) {
    json j;
    j["kind"] = std::string(to_string(m.kind()));
    j["input"] = {{"height", h}, {"width", w}};
    j["params"] = m.param_count();
    j["flops"] = m.estimate_flops(h, w);
    j["subnets"] = json::array();
    for (const auto& r : rows) {
      j["subnets"].push_back(
          {{"name", r.name}, {"params", r.params}, {"calls", r.calls}, {"flops_per_call", r.flops_per_call}});
    }
    json cfg = json::object();
    for (const auto& [k, v] : to_key_values(m.config())) cfg[k] = v;
    j["config"] = cfg;
    out << j.dump(2) << "\n";
    return 0;
  }
  out << to_string(m.kind()) << " x" << m.config().scale << ", n=" << m.config().context_n << " "
      << to_string(m.config().order) << ", " << to_string(m.config().size_variant) << ", input " << h << "x" << w
      << "\n";
  out << std::left << std::setw(14) << "subnet" << std::right << std::setw(14) << "params" << std::setw(7) << "calls"
      << std::setw(14) << "GFLOPs/call" << std::setw(14) << "GFLOPs" << "\n";
  for (const auto& r : rows) {
    const double per = static_cast<double>(r.flops_per_call) / 1e9;
    out << std::left << std::setw(14) << r.name << std::right << std::setw(14) << thousands(r.params) << std::setw(7)
        << r.calls << std::setw(14) << std::fixed << std::setprecision(2) << per << std::setw(14) << per * r.calls
        << "\n";
  }
  out << std::left << std::setw(14) << "total" << std::right << std::setw(14) << thousands(m.param_count())
      << std::setw(7) << "" << std::setw(14) << "" << std::setw(14) << std::fixed << std::setprecision(2)
      << static_cast<double>(m.estimate_flops(h, w)) / 1e9 << "\n";
  out << "(FLOPs = 2 x multiply-adds; biases and activations not counted)\n";
  return 0;
}

// ---- prepare-data ----------------------------------------------------------

int cmd_prepare(const DataFlags& d, int scale, const fs::path& out_dir, std::ostream& out) {
  fs::create_directories(out_dir);
  json manifest;
  manifest["scale"] = scale;
  manifest["sequences"] = json::array();
  if (d.parsed_kind() == DatasetKind::kSynthetic) {
    const SyntheticSet set = make_synthetic(d.synthetic_spec(scale));
    for (const SequenceRecord& rec : set.records) {
      const fs::path frames = out_dir / "frames" / rec.id;
      fs::create_directories(frames);
      for (int i = 0; i < rec.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%04d.png", i);
        write_png(load_hr_frame(rec, i), frames / name);
        for (int k = 0; k < rec.size(); ++k) {
          if (k == i) continue;
          const fs::path p = flow::PrecomputedDirProvider::path_for(out_dir / "flows", rec.id, i, k);
          fs::create_directories(p.parent_path());
          flow::write_flo(set.flows->get({rec.id, i, k, rec.height / scale, rec.width / scale}), p);
        }
      }
      manifest["sequences"].push_back({{"id", rec.id}, {"frames", rec.size()}, {"height", rec.height},
                                       {"width", rec.width}});
    }
    out << "wrote " << set.records.size() << " synthetic clips to " << (out_dir / "frames").string()
        << " with exact flows in " << (out_dir / "flows").string() << "\n";
  } else {
    const auto records = load_dataset(d.parsed_kind(), d.resolved_root(),
                                      d.list_file.empty() ? std::nullopt : std::optional<fs::path>(d.list_file));
    for (const SequenceRecord& rec : records) {
      const fs::path dir = out_dir / "lr" / rec.id;
      fs::create_directories(dir);
      for (int i = 0; i < rec.size(); ++i) {
        write_png(degrade(modcrop(load_hr_frame(rec, i), scale), scale), dir / rec.frames[static_cast<std::size_t>(i)].filename());
      }
      manifest["sequences"].push_back({{"id", rec.id}, {"frames", rec.size()}, {"height", rec.height},
                                       {"width", rec.width}});
    }
    out << "wrote bicubic x" << scale << " LR frames of " << records.size() << " clips to "
        << (out_dir / "lr").string() << "\n";
  }
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

// ---- compute-flow ----------------------------------------------------------

int cmd_compute_flow(const ConfigFlags& cf, const DataFlags& d, const FlowFlags& f, const fs::path& out_dir,
                     bool overwrite, std::ostream& out) {
  const ModelConfig mc = cf.model();
  if (f.command.empty() && f.source != "zero") throw ConfigError("compute-flow needs --flow-cmd (or --flow zero)");
  FlowFlags ff = f;
  ff.source = f.command.empty() ? "zero" : "cmd";
  const Loaded data = load(d, ff, mc.scale, 1);
  int written = 0;
  int skipped = 0;
  for (const SequenceRecord& rec : data.records) {
    std::set<std::pair<int, int>> pairs;
    for (int t = 0; t < rec.size(); ++t) {
      if (t > 0) pairs.insert({t, t - 1});  // motion statistics
      if (!has_full_context(t, mc.context_n, mc.order, rec.size())) continue;
      for (int k : plan_context(t, mc.context_n, mc.order, 0, rec.size()).neighbors) pairs.insert({t, k});
    }
    for (const auto& [t, k] : pairs) {
      const fs::path p = flow::PrecomputedDirProvider::path_for(out_dir, rec.id, t, k);
      if (!overwrite && fs::exists(p)) {
        ++skipped;
        continue;
      }
      fs::create_directories(p.parent_path());
      flow::write_flo(data.flows->get({rec.id, t, k, rec.height / mc.scale, rec.width / mc.scale}), p);
      ++written;
    }
  }
  out << "wrote " << written << " flow fields (" << skipped << " already present) under " << out_dir.string() << "\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const ConfigFlags& cf, const DataFlags& d, const FlowFlags& f, const std::string& kind,
              const fs::path& out_dir, const std::string& resume, std::int64_t max_steps, int log_every,
              std::ostream& out) {
  std::optional<Trainer> trainer;
  if (!resume.empty()) {
    const json m = read_json_file(fs::path(resume) / "manifest.json");
    ModelConfig mc;
    for (const auto& [k, v] : m.at("model_config").items()) apply_model_key(mc, k, v.get<std::string>());
    const Loaded data = load(d, f, mc.scale, 1);
    trainer.emplace(Trainer::resume(resume, {data.records, data.flows}));
    out << "resumed from " << resume << " at epoch " << trainer->epoch() << ", step " << trainer->global_step()
        << "\n";
  } else {
    const ModelConfig mc = cf.model();
    const TrainConfig tc = cf.train();
    const Loaded data = load(d, f, mc.scale, 1);
    trainer.emplace(build_baseline(parse_model_kind(kind), validate_config(mc), tc.seed), tc,
                    TrainingData{data.records, data.flows});
  }
  FitOptions fo;
  fo.checkpoint_dir = out_dir / "checkpoints";
  fo.max_steps = max_steps;
  fo.on_step = [&](const StepStats& s) {
    if (log_every > 0 && s.global_step % log_every == 0) {
      out << "epoch " << s.epoch << " step " << s.global_step << " lr " << s.lr << " loss " << std::setprecision(6)
          << s.loss << "\n";
    }
  };
  fo.on_checkpoint = [&](const fs::path& p) { out << "checkpoint " << p.string() << "\n"; };
  trainer->fit(fo);
  trainer->save_checkpoint(out_dir / "checkpoints" / "last");
  trainer->model().save(out_dir / "model");
  out << "saved model to " << (out_dir / "model").string() << " after " << trainer->global_step() << " steps\n";
  return 0;
}

// ---- infer -----------------------------------------------------------------

int cmd_infer(const DataFlags& d, const FlowFlags& f, const fs::path& model_dir, const std::string& only,
              const fs::path& out_dir, std::ostream& out) {
  const Model model = Model::load(model_dir);
  const ModelConfig& mc = model.config();
  const Loaded data = load(d, f, mc.scale, 1);
  int frames = 0;
  for (const SequenceRecord& rec : data.records) {
    if (!only.empty() && rec.id != only) continue;
    const SequenceView view(rec, mc.scale);
    const fs::path dir = out_dir / rec.id;
    fs::create_directories(dir);
    for (int t = 0; t < rec.size(); ++t) {
      // Near the clip ends missing neighbors are replaced by the closest
      // frame with zero motion.
      const ClampedPlan cp = plan_context_clamped(t, mc.context_n, mc.order, 0, rec.size());
      std::vector<Frame> nbrs;
      std::vector<flow::FlowField> flows;
      const Frame& target = view.lr(t);
      for (std::size_t i = 0; i < cp.plan.neighbors.size(); ++i) {
        const int k = cp.plan.neighbors[i];
        nbrs.push_back(view.lr(k));
        if (mc.use_flow) {
          flows.push_back(cp.replicated[i] || k == t ? flow::FlowField(target.height(), target.width())
                                                     : data.flows->get({rec.id, t, k, target.height(), target.width()}));
        }
      }
      if (model.kind() == ModelKind::kDbpnSisr || !mc.use_flow) flows.clear();
      const Frame sr = model.forward(target, nbrs, flows).sr_frame;
      char name[32];
      std::snprintf(name, sizeof(name), "%04d.png", t);
      write_png(sr, dir / name);
      ++frames;
    }
  }
  if (!only.empty() && frames == 0) throw LayoutError("no sequence named '" + only + "'");
  out << "wrote " << frames << " super-resolved frames under " << out_dir.string() << "\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string method = "bicubic";
  std::string model_dir;
  std::string protocol = "B";
  int scale = 4;
  bool tiers = false;
  double slow_medium = flow::TierThresholds{}.slow_medium;
  double medium_fast = flow::TierThresholds{}.medium_fast;
  std::string csv;
  std::string json_out;
  std::string svg;
};

int cmd_eval(const EvalArgs& a, const DataFlags& d, const FlowFlags& f, bool as_json, std::ostream& out) {
  std::optional<Model> model;
  EvalMethod method;
  if (a.method == "bicubic") {
    method = bicubic_method(ScaleFactor(a.scale).value());
  } else if (a.method == "model") {
    if (a.model_dir.empty()) throw ConfigError("--method model needs --model");
    model.emplace(Model::load(a.model_dir));
    method = model_method(*model, std::string(to_string(model->kind())));
  } else {
    throw ConfigError("unknown method '" + a.method + "' (expected bicubic or model)");
  }
  const Loaded data = load(d, f, method.scale, 1);
  EvalOptions opts;
  opts.flows = data.flows.get();
  if (a.tiers) opts.tiers = flow::TierThresholds{a.slow_medium, a.medium_fast};
  const EvalReport r = evaluate_dataset(method, data.records, parse_protocol(a.protocol), opts);
  if (!a.csv.empty()) {
    std::ostringstream s;
    write_csv(r, s);
    write_text(a.csv, s.str());
  }
  if (!a.json_out.empty()) write_text(a.json_out, to_json(r) + "\n");
  if (!a.svg.empty()) write_text(a.svg, tier_bars_svg(r));
  out << (as_json ? to_json(r) + "\n" : format_table(r));
  return 0;
}

// ---- ablate ----------------------------------------------------------------

AblationGrid parse_grid(const std::string& text) {
  AblationGrid g;
  std::stringstream axes(text);
  std::string axis;
  while (std::getline(axes, axis, ';')) {
    if (axis.empty()) continue;
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ConfigError("grid axis '" + axis + "' is not key=v1,v2");
    const std::string key = axis.substr(0, eq);
    std::stringstream vals(axis.substr(eq + 1));
    std::string v;
    while (std::getline(vals, v, ',')) {
      ModelConfig c;
      if (!apply_model_key(c, key, v)) throw ConfigError("unknown grid axis '" + key + "'");
      if (key == "context_n") {
        g.context_n.push_back(c.context_n);
      } else if (key == "order") {
        g.order.push_back(c.order);
      } else if (key == "use_flow") {
        g.use_flow.push_back(c.use_flow);
      } else if (key == "integration") {
        g.integration.push_back(c.integration);
      } else if (key == "size_variant") {
        g.size_variant.push_back(c.size_variant);
      } else if (key == "residual_learning") {
        g.residual_learning.push_back(c.residual_learning);
      } else {
        throw ConfigError("'" + key + "' is not an ablation axis");
      }
    }
  }
  return g;
}

// Small enough to train a cell in a minute or two on one core.
ModelConfig toy_model() {
  ModelConfig c;
  c.context_n = 2;
  c.c_l = 8;
  c.c_m = 8;
  c.c_h = 8;
  c.sisr_stages = 2;
  c.resnet_blocks = 1;
  c.residual_learning = true;
  return c;
}

TrainConfig toy_train() {
  TrainConfig t;
  t.batch_size = 4;
  t.lr_initial = 1e-3;
  t.patch_lr = 12;
  t.total_epochs = 1000000;
  t.lr_decay_epoch = 1000000;
  t.steps_per_epoch = 1;
  return t;
}

int cmd_ablate(const ConfigFlags& cf, const DataFlags& d, const std::string& grid_text, std::int64_t steps,
               const std::string& protocol, const fs::path& out_dir, std::ostream& out) {
  AblationSetup setup;
  setup.base = cf.model(toy_model());
  setup.train = cf.train(toy_train());
  setup.train_steps = steps;
  setup.seed = setup.train.seed;
  setup.protocol = parse_protocol(protocol);
  SyntheticSpec spec = d.synthetic_spec(setup.base.scale);
  spec.frames = std::max(spec.frames, 2 * 4 + 1);
  const SyntheticSet train = make_synthetic(spec);
  spec.seed += 1000;
  spec.sequences = std::max(2, spec.sequences / 2);
  spec.frames = std::max(spec.frames, setup.protocol.trim_head + setup.protocol.trim_tail + 1);
  const SyntheticSet test = make_synthetic(spec);
  auto flows = std::make_shared<flow::InMemoryFlowProvider>();
  for (const SyntheticSet* s : {&train, &test}) {
    for (const SequenceRecord& r : s->records) {
      for (int t = 0; t < r.size(); ++t) {
        for (int k = 0; k < r.size(); ++k) {
          if (k != t) flows->put(r.id + (s == &test ? "-test" : ""), t, k, s->flows->get({r.id, t, k, 0, 0}));
        }
      }
    }
  }
  setup.train_records = train.records;
  for (SequenceRecord r : test.records) {
    r.id += "-test";
    setup.test_records.push_back(std::move(r));
  }
  setup.flows = flows;
  const auto cells = run_ablation(setup, parse_grid(grid_text), [&out](const AblationCell& c) {
    out << "cell n=" << c.config.context_n << " " << to_string(c.config.order) << ": "
        << (c.ok ? "done" : "failed: " + c.error) << "\n";
  });
  const std::string table = format_ablation_table(cells);
  out << table;
  if (!out_dir.empty()) {
    write_text(out_dir / "ablation.txt", table);
    write_text(out_dir / "ablation.json", ablation_json(cells) + "\n");
    write_text(out_dir / "context_curve.svg", context_curve_svg(cells));
  }
  return 0;
}

// ---- plot ------------------------------------------------------------------

int cmd_plot(const std::string& ablation, const std::string& eval, const fs::path& out_path, std::ostream& out) {
  if (ablation.empty() == eval.empty()) throw ConfigError("plot needs exactly one of --ablation or --eval");
  std::string svg;
  if (!ablation.empty()) {
    std::vector<AblationCell> cells;
    for (const json& j : read_json_file(ablation)) {
      AblationCell c;
      for (const auto& [k, v] : j.at("config").items()) apply_model_key(c.config, k, v.get<std::string>());
      c.ok = j.at("ok").get<bool>();
      if (c.ok) {
        c.psnr = j.at("psnr").get<double>();
        c.ssim = j.at("ssim").get<double>();
      }
      cells.push_back(c);
    }
    svg = context_curve_svg(cells);
  } else {
    const json j = read_json_file(eval);
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.protocol.name = j.at("protocol").at("name").get<std::string>();
    const auto aggregate = [](const json& t) {
      Aggregate a;
      a.label = t.at("label").get<std::string>();
      a.frames = t.at("frames").get<int>();
      a.sequences = t.at("sequences").get<int>();
      a.psnr = t.at("psnr").get<double>();
      a.ssim = t.at("ssim").get<double>();
      return a;
    };
    for (const json& t : j.at("tiers")) r.tiers.push_back(aggregate(t));
    r.overall = aggregate(j.at("overall"));
    svg = tier_bars_svg(r);
  }
  write_text(out_path, svg);
  out << "wrote " << out_path.string() << "\n";
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage:
      return 1;
    case ErrorKind::kData:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
  }
  return 2;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recurrent back-projection video super-resolution", "rbpn"};
  app.require_subcommand(0, 1);

  ConfigFlags cf;
  DataFlags data;
  FlowFlags flows;
  bool as_json = false;
  std::string kind = "RBPN";
  std::string out_dir;
  std::string model_dir;

  auto* inspect = app.add_subcommand("inspect", "Per-subnet parameter and FLOP table");
  int in_h = 120;
  int in_w = 160;
  cf.attach(*inspect, false);
  inspect->add_option("--kind", kind, "RBPN | DBPN_SISR | DBPN_MISR | RBPN_MISR")->capture_default_str();
  inspect->add_option("--height", in_h, "LR input height")->capture_default_str();
  inspect->add_option("--width", in_w, "LR input width")->capture_default_str();
  inspect->add_flag("--json", as_json, "Machine-readable output");

  auto* prepare = app.add_subcommand("prepare-data", "Write bicubic LR frames, or a synthetic dataset with flows");
  int prep_scale = 4;
  data.attach(*prepare);
  prepare->add_option("--scale", prep_scale, "Downscaling factor")->capture_default_str();
  prepare->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* compute = app.add_subcommand("compute-flow", "Precompute .flo files with an external estimator");
  bool overwrite = false;
  cf.attach(*compute, false);
  data.attach(*compute);
  flows.attach(*compute);
  compute->add_option("--out-dir", out_dir, "Flow tree root")->required();
  compute->add_flag("--overwrite", overwrite, "Recompute existing files");

  auto* train = app.add_subcommand("train", "Train a model; checkpoints every epoch");
  std::string resume;
  std::int64_t max_steps = -1;
  int log_every = 10;
  cf.attach(*train, true);
  data.attach(*train);
  flows.attach(*train);
  train->add_option("--kind", kind, "RBPN | DBPN_SISR | DBPN_MISR | RBPN_MISR")->capture_default_str();
  train->add_option("--out-dir", out_dir, "Checkpoints and final model")->required();
  train->add_option("--resume", resume, "Checkpoint directory to continue from");
  train->add_option("--max-steps", max_steps, "Stop after this many optimizer steps");
  train->add_option("--log-every", log_every, "Print the loss every N steps")->capture_default_str();

  auto* infer = app.add_subcommand("infer", "Super-resolve every frame of a dataset");
  std::string only;
  data.attach(*infer);
  flows.attach(*infer);
  infer->add_option("--model", model_dir, "Saved model directory")->required();
  infer->add_option("--sequence", only, "Only this clip");
  infer->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Y-channel PSNR/SSIM under protocol A or B");
  EvalArgs ea;
  data.attach(*eval);
  flows.attach(*eval);
  eval->add_option("--method", ea.method, "bicubic | model")->capture_default_str();
  eval->add_option("--model", ea.model_dir, "Saved model directory (with --method model)");
  eval->add_option("--protocol", ea.protocol, "A (crop 8, trim 6/3) | B (no crop, trim 2/2)")->capture_default_str();
  eval->add_option("--scale", ea.scale, "Scale for the bicubic method")->capture_default_str();
  eval->add_flag("--tiers", ea.tiers, "Stratify clips by motion");
  eval->add_option("--slow-medium", ea.slow_medium, "Tier cut point, px/frame")->capture_default_str();
  eval->add_option("--medium-fast", ea.medium_fast, "Tier cut point, px/frame")->capture_default_str();
  eval->add_option("--csv", ea.csv, "Per-frame CSV output");
  eval->add_option("--json-out", ea.json_out, "Aggregate JSON output");
  eval->add_option("--svg", ea.svg, "Per-tier bar chart");
  eval->add_flag("--json", as_json, "Print JSON instead of the table");

  auto* ablate = app.add_subcommand("ablate", "Train and score a grid of small models on synthetic clips");
  std::string grid = "context_n=2,4";
  std::int64_t steps = 150;
  std::string protocol = "B";
  cf.attach(*ablate, true);
  data.attach(*ablate);
  ablate->add_option("--grid", grid, "Axes, e.g. 'context_n=2,4;order=P,PF;use_flow=true,false'")
      ->capture_default_str();
  ablate->add_option("--steps", steps, "Training steps per cell")->capture_default_str();
  ablate->add_option("--protocol", protocol, "Evaluation protocol")->capture_default_str();
  ablate->add_option("--out-dir", out_dir, "Where to write table, JSON and plot");

  auto* plot = app.add_subcommand("plot", "Render SVG plots from ablation or eval JSON");
  std::string plot_ablation;
  std::string plot_eval;
  std::string plot_out;
  plot->add_option("--ablation", plot_ablation, "ablation.json from `ablate`");
  plot->add_option("--eval", plot_eval, "JSON from `eval --json-out`");
  plot->add_option("--out", plot_out, "SVG path")->required();

  if (argc <= 1) {
    err << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    if (inspect->parsed()) return cmd_inspect(cf, kind, in_h, in_w, as_json, out);
    if (prepare->parsed()) return cmd_prepare(data, ScaleFactor(prep_scale).value(), out_dir, out);
    if (compute->parsed()) return cmd_compute_flow(cf, data, flows, out_dir, overwrite, out);
    if (train->parsed()) return cmd_train(cf, data, flows, kind, out_dir, resume, max_steps, log_every, out);
    if (infer->parsed()) return cmd_infer(data, flows, model_dir, only, out_dir, out);
    if (eval->parsed()) return cmd_eval(ea, data, flows, as_json, out);
    if (ablate->parsed()) return cmd_ablate(cf, data, grid, steps, protocol, out_dir, out);
    if (plot->parsed()) return cmd_plot(plot_ablation, plot_eval, plot_out, out);
    err << app.help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace rbpn::cli
