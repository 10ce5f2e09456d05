#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "rbpn/errors.hpp"
#include "rbpn/evaluation.hpp"
#include "rbpn/synthetic.hpp"
#include "support.hpp"

namespace rbpn {
namespace {

using testing::tiny_config;

TEST(Protocols, FrameSelection) {
  const auto a = evaluated_frames(protocol_a(), 12, 0, TemporalOrder::kP);
  EXPECT_EQ(a, (std::vector<int>{6, 7, 8}));
  EXPECT_EQ(evaluated_frames(protocol_b(), 41, 0, TemporalOrder::kP).size(), 37u);
  const auto pf = evaluated_frames(protocol_b(), 41, 6, TemporalOrder::kPF);
  ASSERT_EQ(pf.size(), 35u);
  EXPECT_EQ(pf.front(), 3);
  EXPECT_EQ(pf.back(), 37);
  EXPECT_TRUE(evaluated_frames(protocol_a(), 9, 0, TemporalOrder::kP).empty());
  EXPECT_EQ(parse_protocol("a").border_crop, 8);
  EXPECT_THROW(parse_protocol("C"), ConfigError);
}

class SyntheticEval : public ::testing::Test {
 protected:
  SyntheticEval() {
    SyntheticSpec spec;
    spec.sequences = 3;
    spec.frames = 7;
    spec.hr_height = 48;
    spec.hr_width = 40;
    spec.seed = 21;
    set = make_synthetic(spec);
  }
  SyntheticSet set;
};

TEST_F(SyntheticEval, BicubicAggregatesAreMeansOfClipMeans) {
  const EvalReport r = evaluate_dataset(bicubic_method(4), set.records, protocol_b());
  ASSERT_EQ(r.frames.size(), 9u);
  ASSERT_EQ(r.sequences.size(), 3u);
  EXPECT_EQ(r.frames.front().sequence, set.records[0].id);
  EXPECT_EQ(r.frames.front().frame, 2);
  double psnr = 0.0;
  for (const Aggregate& a : r.sequences) {
    EXPECT_EQ(a.frames, 3);
    psnr += a.psnr;
  }
  EXPECT_NEAR(r.overall.psnr, psnr / 3.0, 1e-12);
  EXPECT_EQ(r.overall.frames, 9);
  EXPECT_TRUE(r.tiers.empty());
  for (const MetricRecord& m : r.frames) {
    EXPECT_GT(m.psnr, 15.0);
    EXPECT_LT(m.psnr, 60.0);
    EXPECT_GT(m.ssim, 0.0);
    EXPECT_LE(m.ssim, 1.0);
  }
}

TEST_F(SyntheticEval, UnequalClipsWeighClipsEqually) {
  std::vector<SequenceRecord> recs = set.records;
  recs[0].memory = std::make_shared<const std::vector<Frame>>(recs[0].memory->begin(), recs[0].memory->begin() + 5);
  const EvalReport r = evaluate_dataset(bicubic_method(4), recs, protocol_b());
  ASSERT_EQ(r.frames.size(), 7u);
  double clip_mean = 0.0;
  for (const Aggregate& a : r.sequences) clip_mean += a.psnr / 3.0;
  double frame_mean = 0.0;
  for (const MetricRecord& m : r.frames) frame_mean += m.psnr / 7.0;
  EXPECT_NEAR(r.overall.psnr, clip_mean, 1e-12);
  EXPECT_NEAR(r.overall.psnr_frame_weighted, frame_mean, 1e-12);
}

TEST_F(SyntheticEval, TiersFollowClipMotion) {
  EvalOptions opts;
  opts.flows = set.flows.get();
  opts.tiers = flow::TierThresholds{0.5, 1.0};
  const EvalReport r = evaluate_dataset(bicubic_method(4), set.records, protocol_b(), opts);
  ASSERT_EQ(r.motion.size(), 3u);
  const auto tiers = flow::make_tiers(*opts.tiers);
  int tier_frames = 0;
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const double m = r.motion.at(set.records[i].id);
    EXPECT_NEAR(m, set.speeds[i], 1e-5);
    const std::string want(flow::to_string(flow::stratify(m, tiers)));
    for (const MetricRecord& f : r.frames) {
      if (f.sequence == set.records[i].id) EXPECT_EQ(f.tier, want);
    }
  }
  for (const Aggregate& a : r.tiers) tier_frames += a.frames;
  EXPECT_EQ(tier_frames, 9);
  EvalOptions no_flow;
  no_flow.tiers = opts.tiers;
  EXPECT_THROW(evaluate_dataset(bicubic_method(4), set.records, protocol_b(), no_flow), ConfigError);
}

TEST_F(SyntheticEval, ModelMethodUsesContextWindow) {
  ModelConfig c = tiny_config(4, 6);
  c.residual_learning = true;
  const Model m = build_model(validate_config(c), 3);
  EvalOptions opts;
  opts.flows = set.flows.get();
  const EvalReport r = evaluate_dataset(model_method(m, "tiny"), set.records, protocol_b(), opts);
  // PF with n = 6 on 7 frames leaves only the middle frame.
  ASSERT_EQ(r.frames.size(), 3u);
  EXPECT_EQ(r.frames[0].frame, 3);
  EXPECT_EQ(r.method, "tiny");
  EXPECT_THROW(evaluate_dataset(model_method(m, "tiny"), set.records, protocol_b()), ConfigError);
}

TEST_F(SyntheticEval, SisrBaselineNeedsNoFlow) {
  const Model m = build_baseline(ModelKind::kDbpnSisr, validate_config(tiny_config(4, 2)), 3);
  const EvalMethod method = model_method(m, "sisr");
  EXPECT_FALSE(method.needs_flow);
  EXPECT_EQ(method.context_n, 0);
  EXPECT_EQ(evaluate_dataset(method, set.records, protocol_b()).frames.size(), 9u);
}

TEST_F(SyntheticEval, ReportFormats) {
  EvalOptions opts;
  opts.flows = set.flows.get();
  opts.tiers = flow::TierThresholds{};
  const EvalReport r = evaluate_dataset(bicubic_method(4), set.records, protocol_b(), opts);

  std::ostringstream csv;
  write_csv(r, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "sequence,frame,psnr,ssim,protocol,tier");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(rows, 9);

  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j.at("method"), "bicubic");
  EXPECT_EQ(j.at("protocol").at("trim_head"), 2);
  EXPECT_EQ(j.at("sequences").size(), 3u);
  EXPECT_NEAR(j.at("overall").at("psnr").get<double>(), r.overall.psnr, 1e-9);
  EXPECT_EQ(j.at("motion").size(), 3u);

  const std::string table = format_table(r);
  EXPECT_NE(table.find("Average"), std::string::npos);
  EXPECT_NE(table.find(set.records[2].id), std::string::npos);
  EXPECT_NE(table.find("protocol B"), std::string::npos);
}

TEST(Ablation, GridIsCartesian) {
  AblationGrid g;
  g.context_n = {2, 4, 6};
  g.order = {TemporalOrder::kP, TemporalOrder::kPF};
  const auto cells = expand_grid(tiny_config(4, 2), g);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].context_n, 2);
  EXPECT_EQ(cells[0].order, TemporalOrder::kP);
  EXPECT_EQ(cells[1].order, TemporalOrder::kPF);
  EXPECT_EQ(cells[5].context_n, 6);
  EXPECT_EQ(expand_grid(tiny_config(4, 2), {}).size(), 1u);

  AblationGrid v;
  v.size_variant = {SizeVariant::kS, SizeVariant::kL};
  const auto sized = expand_grid(tiny_config(4, 2), v);
  ASSERT_EQ(sized.size(), 2u);
  EXPECT_EQ(sized[0].c_l, 4);  // widths stay narrow
  EXPECT_LT(sized[0].sisr_stages, sized[1].sisr_stages);
}

TEST(Ablation, RunsEveryCellAndRecordsFailures) {
  SyntheticSpec spec;
  spec.sequences = 2;
  spec.frames = 7;
  spec.hr_height = 32;
  spec.hr_width = 32;
  spec.seed = 8;
  const SyntheticSet set = make_synthetic(spec);
  AblationSetup setup;
  setup.base = tiny_config(4, 2);
  setup.train.batch_size = 2;
  setup.train.patch_lr = 6;
  setup.train.lr_initial = 1e-3;
  setup.train_steps = 2;
  setup.train_records = set.records;
  setup.test_records = set.records;
  setup.flows = set.flows;
  setup.protocol = protocol_b();
  AblationGrid g;
  g.context_n = {2, 8};  // 8 does not fit a 7-frame clip
  int seen = 0;
  const auto cells = run_ablation(setup, g, [&seen](const AblationCell&) { ++seen; });
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(seen, 2);
  EXPECT_TRUE(cells[0].ok) << cells[0].error;
  EXPECT_TRUE(std::isfinite(cells[0].psnr));
  EXPECT_GT(cells[0].params, 0);
  EXPECT_FALSE(cells[1].ok);
  EXPECT_FALSE(cells[1].error.empty());
  const std::string table = format_ablation_table(cells);
  EXPECT_NE(table.find("failed"), std::string::npos);
  const auto j = nlohmann::json::parse(ablation_json(cells));
  EXPECT_EQ(j.size(), 2u);
  EXPECT_NE(context_curve_svg(cells).find("<svg"), std::string::npos);
}

TEST(Plots, SvgContainsSeries) {
  const std::string svg = line_plot_svg("t", "x", "y", {{"a", {{1, 2}, {2, 3}}}, {"b", {{1, 1}}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find(">a<"), std::string::npos);
  const std::string bars = bar_plot_svg("t", "dB", {{"slow", 30.0}, {"fast", 25.0}});
  EXPECT_NE(bars.find("slow"), std::string::npos);
}

}  // namespace
}  // namespace rbpn
