#include "rbpn/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "rbpn/errors.hpp"
#include "rbpn/resize.hpp"

namespace rbpn {

using json = nlohmann::json;

EvalProtocol protocol_a() { return {"A", 8, 6, 3}; }
EvalProtocol protocol_b() { return {"B", 0, 2, 2}; }

EvalProtocol parse_protocol(std::string_view name) {
  if (name == "A" || name == "a") return protocol_a();
  if (name == "B" || name == "b") return protocol_b();
  throw ConfigError("unknown protocol '" + std::string(name) + "' (expected A or B)");
}

std::vector<int> evaluated_frames(const EvalProtocol& p, int num_frames, int context_n, TemporalOrder order) {
  if (p.border_crop < 0 || p.trim_head < 0 || p.trim_tail < 0) throw RangeError("protocol values must be >= 0");
  std::vector<int> out;
  for (int t = p.trim_head; t < num_frames - p.trim_tail; ++t) {
    if (has_full_context(t, context_n, order, num_frames)) out.push_back(t);
  }
  return out;
}

EvalMethod bicubic_method(int scale) {
  EvalMethod m;
  m.name = "bicubic";
  m.scale = scale;
  m.run = [scale](const Frame& target, std::span<const Frame>, std::span<const flow::FlowField>) {
    return bicubic_resize(target, target.height() * scale, target.width() * scale, scale);
  };
  return m;
}

EvalMethod model_method(const Model& model, std::string name, std::uint64_t seed) {
  EvalMethod m;
  m.name = std::move(name);
  m.scale = model.config().scale;
  m.seed = seed;
  const bool sisr = model.kind() == ModelKind::kDbpnSisr;
  m.context_n = sisr ? 0 : model.config().context_n;
  m.order = model.config().order;
  m.needs_flow = model.config().use_flow && (model.kind() == ModelKind::kRbpn || model.kind() == ModelKind::kRbpnMisr);
  const int n = model.config().context_n;
  m.run = [&model, sisr, n](const Frame& target, std::span<const Frame> neighbors,
                            std::span<const flow::FlowField> flows) {
    if (sisr) {
      // The SISR baseline ignores context; feed copies of the target to satisfy the arity check.
      std::vector<Frame> fill(static_cast<std::size_t>(n), target);
      return model.forward(target, fill, {}).sr_frame;
    }
    return model.forward(target, neighbors, flows).sr_frame;
  };
  return m;
}

double sequence_motion(const SequenceRecord& rec, int scale, const flow::FlowProvider& flows) {
  if (rec.size() < 2) return 0.0;
  const int h = rec.height / scale;
  const int w = rec.width / scale;
  std::vector<flow::FlowField> fields;
  for (int t = 1; t < rec.size(); ++t) fields.push_back(flows.get({rec.id, t, t - 1, h, w}));
  return flow::mean_flow_magnitude(fields);
}

namespace {

Aggregate aggregate(const std::string& label, const std::vector<const MetricRecord*>& rows) {
  Aggregate a;
  a.label = label;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_seq;
  std::vector<std::string> order;
  for (const MetricRecord* r : rows) {
    auto [it, fresh] = per_seq.try_emplace(r->sequence);
    if (fresh) order.push_back(r->sequence);
    it->second.first.push_back(r->psnr);
    it->second.second.push_back(r->ssim);
    a.psnr_frame_weighted += r->psnr;
    a.ssim_frame_weighted += r->ssim;
  }
  a.frames = static_cast<int>(rows.size());
  a.sequences = static_cast<int>(order.size());
  if (rows.empty()) return a;
  a.psnr_frame_weighted /= a.frames;
  a.ssim_frame_weighted /= a.frames;
  for (const std::string& s : order) {
    const auto& [p, q] = per_seq[s];
    double sp = 0.0;
    double sq = 0.0;
    for (double v : p) sp += v;
    for (double v : q) sq += v;
    a.psnr += sp / static_cast<double>(p.size());
    a.ssim += sq / static_cast<double>(q.size());
  }
  a.psnr /= a.sequences;
  a.ssim /= a.sequences;
  return a;
}

}  // namespace

EvalReport evaluate_dataset(const EvalMethod& method, const std::vector<SequenceRecord>& records,
                            const EvalProtocol& protocol, const EvalOptions& opts) {
  if (!method.run) throw ConfigError("evaluation method '" + method.name + "' has no runner");
  if ((method.needs_flow || opts.tiers) && opts.flows == nullptr) {
    throw ConfigError("evaluating '" + method.name + "' needs a flow provider");
  }
  EvalReport report;
  report.method = method.name;
  report.protocol = protocol;
  std::vector<flow::MotionTier> tiers;
  if (opts.tiers) tiers = flow::make_tiers(*opts.tiers);

  for (const SequenceRecord& rec : records) {
    std::string tier;
    if (opts.tiers) {
      const double mag = sequence_motion(rec, method.scale, *opts.flows);
      report.motion[rec.id] = mag;
      tier = std::string(flow::to_string(flow::stratify(mag, tiers)));
    }
    const SequenceView view(rec, method.scale);
    for (int t : evaluated_frames(protocol, rec.size(), method.context_n, method.order)) {
      const ContextPlan plan = plan_context(t, method.context_n, method.order, method.seed, rec.size());
      const Frame& target = view.lr(t);
      std::vector<Frame> neighbors;
      std::vector<flow::FlowField> flows;
      for (int k : plan.neighbors) {
        neighbors.push_back(view.lr(k));
        if (method.needs_flow) flows.push_back(opts.flows->get({rec.id, t, k, target.height(), target.width()}));
      }
      const Frame sr = quantize_8bit(method.run(target, neighbors, flows));
      const Frame gt = view.hr(t);
      if (sr.shape() != gt.shape()) {
        throw ShapeError("'" + rec.id + "' frame " + std::to_string(t) + ": output " + to_string(sr.shape()) +
                         " vs ground truth " + to_string(gt.shape()));
      }
      MetricRecord m{rec.id, t, psnr_y(sr, gt, protocol.border_crop), ssim_y(sr, gt, protocol.border_crop),
                     protocol.name, tier};
      if (opts.on_frame) opts.on_frame(m);
      report.frames.push_back(std::move(m));
    }
  }

  std::vector<std::string> seq_order;
  std::map<std::string, std::vector<const MetricRecord*>> by_seq;
  std::map<std::string, std::vector<const MetricRecord*>> by_tier;
  std::vector<const MetricRecord*> all;
  for (const MetricRecord& m : report.frames) {
    if (by_seq[m.sequence].empty()) seq_order.push_back(m.sequence);
    by_seq[m.sequence].push_back(&m);
    if (!m.tier.empty()) by_tier[m.tier].push_back(&m);
    all.push_back(&m);
  }
  for (const std::string& s : seq_order) report.sequences.push_back(aggregate(s, by_seq[s]));
  for (const flow::Tier t : {flow::Tier::kSlow, flow::Tier::kMedium, flow::Tier::kFast}) {
    const std::string name(flow::to_string(t));
    if (by_tier.count(name) != 0) report.tiers.push_back(aggregate(name, by_tier[name]));
  }
  report.overall = aggregate("Average", all);
  return report;
}

void write_csv(const EvalReport& r, std::ostream& out) {
  out << "sequence,frame,psnr,ssim,protocol,tier\n";
  char buf[64];
  for (const MetricRecord& m : r.frames) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", m.psnr, m.ssim);
    out << m.sequence << ',' << m.frame << ',' << buf << ',' << m.protocol << ',' << m.tier << '\n';
  }
}

namespace {

json aggregate_json(const Aggregate& a) {
  return {{"label", a.label},
          {"frames", a.frames},
          {"sequences", a.sequences},
          {"psnr", a.psnr},
          {"ssim", a.ssim},
          {"psnr_frame_weighted", a.psnr_frame_weighted},
          {"ssim_frame_weighted", a.ssim_frame_weighted}};
}

std::string psnr_ssim(double p, double s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f/%.3f", p, s);
  return buf;
}

}  // namespace

std::string to_json(const EvalReport& r) {
  json j;
  j["method"] = r.method;
  j["protocol"] = {{"name", r.protocol.name},
                   {"border_crop", r.protocol.border_crop},
                   {"trim_head", r.protocol.trim_head},
                   {"trim_tail", r.protocol.trim_tail}};
  j["sequences"] = json::array();
  for (const Aggregate& a : r.sequences) j["sequences"].push_back(aggregate_json(a));
  j["tiers"] = json::array();
  for (const Aggregate& a : r.tiers) j["tiers"].push_back(aggregate_json(a));
  j["overall"] = aggregate_json(r.overall);
  if (!r.motion.empty()) j["motion"] = r.motion;
  return j.dump(2);
}

std::string format_table(const EvalReport& r) {
  std::ostringstream out;
  out << r.method << " (protocol " << r.protocol.name << ": crop " << r.protocol.border_crop << ", trim "
      << r.protocol.trim_head << "/" << r.protocol.trim_tail << ")\n";
  std::size_t width = 8;
  for (const Aggregate& a : r.sequences) width = std::max(width, a.label.size());
  const auto row = [&](const std::string& label, int frames, double p, double s) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << label << std::right << std::setw(7) << frames
        << "  " << psnr_ssim(p, s) << "\n";
  };
  out << std::left << std::setw(static_cast<int>(width) + 2) << "Clip" << std::right << std::setw(7) << "Frames"
      << "  PSNR/SSIM\n";
  for (const Aggregate& a : r.sequences) row(a.label, a.frames, a.psnr, a.ssim);
  for (const Aggregate& a : r.tiers) row("[" + a.label + "]", a.frames, a.psnr, a.ssim);
  row("Average", r.overall.frames, r.overall.psnr, r.overall.ssim);
  return out.str();
}

std::vector<ModelConfig> expand_grid(const ModelConfig& base, const AblationGrid& grid) {
  const auto or_base = [](const auto& axis, auto value) {
    using T = decltype(value);
    return axis.empty() ? std::vector<T>{value} : std::vector<T>(axis.begin(), axis.end());
  };
  std::vector<ModelConfig> out;
  for (SizeVariant sv : or_base(grid.size_variant, base.size_variant))
    for (int n : or_base(grid.context_n, base.context_n))
      for (TemporalOrder o : or_base(grid.order, base.order))
        for (bool f : or_base(grid.use_flow, base.use_flow))
          for (Integration i : or_base(grid.integration, base.integration))
            for (bool r : or_base(grid.residual_learning, base.residual_learning)) {
              ModelConfig c = base;
              if (!grid.size_variant.empty()) {
                const ModelConfig v = ModelConfig::with_variant(sv);
                c.size_variant = sv;
                c.sisr_stages = v.sisr_stages;
                c.resnet_blocks = v.resnet_blocks;
              }
              c.context_n = n;
              c.order = o;
              c.use_flow = f;
              c.integration = i;
              c.residual_learning = r;
              out.push_back(c);
            }
  return out;
}

std::vector<AblationCell> run_ablation(const AblationSetup& setup, const AblationGrid& grid,
                                       const std::function<void(const AblationCell&)>& on_cell) {
  std::vector<AblationCell> cells;
  for (const ModelConfig& cfg : expand_grid(setup.base, grid)) {
    AblationCell cell;
    cell.config = cfg;
    try {
      Model model = build_model(validate_config(cfg), setup.seed);
      cell.params = model.param_count();
      TrainConfig tc = setup.train;
      tc.seed = setup.seed;
      Trainer trainer(std::move(model), tc, {setup.train_records, setup.flows});
      FitOptions fo;
      fo.max_steps = setup.train_steps;
      fo.on_step = [&cell](const StepStats& s) { cell.final_loss = s.loss; };
      trainer.fit(fo);
      EvalOptions eo;
      eo.flows = setup.flows.get();
      const EvalReport rep =
          evaluate_dataset(model_method(trainer.model(), "cell", setup.seed), setup.test_records, setup.protocol, eo);
      if (rep.frames.empty()) throw EmptyInputError("no test frame has a full context window");
      cell.psnr = rep.overall.psnr;
      cell.ssim = rep.overall.ssim;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    if (on_cell) on_cell(cell);
    cells.push_back(std::move(cell));
  }
  return cells;
}

namespace {

std::string cell_label(const ModelConfig& c) {
  std::ostringstream s;
  s << "n=" << c.context_n << " " << to_string(c.order) << " flow=" << (c.use_flow ? "on" : "off") << " "
    << to_string(c.integration) << " " << to_string(c.size_variant) << " res=" << (c.residual_learning ? "on" : "off");
  return s.str();
}

json config_json(const ModelConfig& c) {
  json o = json::object();
  for (const auto& [k, v] : to_key_values(c)) o[k] = v;
  return o;
}

}  // namespace

std::string format_ablation_table(const std::vector<AblationCell>& cells) {
  std::ostringstream out;
  out << std::left << std::setw(48) << "Cell" << std::right << std::setw(10) << "Params" << "  PSNR/SSIM\n";
  for (const AblationCell& c : cells) {
    out << std::left << std::setw(48) << cell_label(c.config) << std::right << std::setw(10) << c.params << "  ";
    if (c.ok) {
      out << psnr_ssim(c.psnr, c.ssim) << "\n";
    } else {
      out << "failed: " << c.error << "\n";
    }
  }
  return out.str();
}

std::string ablation_json(const std::vector<AblationCell>& cells) {
  json arr = json::array();
  for (const AblationCell& c : cells) {
    json j = {{"config", config_json(c.config)}, {"ok", c.ok}, {"params", c.params}};
    if (c.ok) {
      j["psnr"] = c.psnr;
      j["ssim"] = c.ssim;
      j["final_loss"] = c.final_loss;
    } else {
      j["error"] = c.error;
    }
    arr.push_back(j);
  }
  return arr.dump(2);
}

std::string context_curve_svg(const std::vector<AblationCell>& cells) {
  std::map<std::string, std::vector<SeriesPoint>> groups;
  for (const AblationCell& c : cells) {
    if (!c.ok) continue;
    std::string key = std::string(to_string(c.config.order)) + (c.config.use_flow ? "" : " w/o flow");
    if (c.config.integration == Integration::kLast) key += " LAST";
    groups[key].push_back({static_cast<double>(c.config.context_n), c.psnr});
  }
  std::vector<std::pair<std::string, std::vector<SeriesPoint>>> series;
  for (auto& [k, pts] : groups) {
    std::sort(pts.begin(), pts.end(), [](const SeriesPoint& a, const SeriesPoint& b) { return a.x < b.x; });
    series.emplace_back(k, pts);
  }
  return line_plot_svg("PSNR vs context length", "neighbor frames (n)", "PSNR (dB)", series);
}

std::string tier_bars_svg(const EvalReport& r) {
  std::vector<std::pair<std::string, double>> bars;
  for (const Aggregate& a : r.tiers) bars.emplace_back(a.label, a.psnr);
  bars.emplace_back("average", r.overall.psnr);
  return bar_plot_svg(r.method + " by motion tier (protocol " + r.protocol.name + ")", "PSNR (dB)", bars);
}

}  // namespace rbpn
