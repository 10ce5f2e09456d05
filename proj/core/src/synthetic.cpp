#include "rbpn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "rbpn/errors.hpp"

namespace rbpn {

namespace {

struct Wave {
  double fx, fy, phase, amp;
};

}  // namespace

SyntheticSet make_synthetic(const SyntheticSpec& spec) {
  if (spec.sequences < 1 || spec.frames < 1 || spec.hr_height < 1 || spec.hr_width < 1 || spec.waves < 1) {
    throw ConfigError("synthetic spec needs positive counts and dims");
  }
  if (spec.hr_height % spec.scale != 0 || spec.hr_width % spec.scale != 0) {
    throw ConfigError("synthetic HR dims must be multiples of the scale");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticSet set;
  set.flows = std::make_shared<flow::InMemoryFlowProvider>();
  const double two_pi = 2.0 * std::numbers::pi;
  const double amp = 1.2 / std::sqrt(static_cast<double>(spec.waves));

  for (int s = 0; s < spec.sequences; ++s) {
    std::vector<Wave> waves[3];
    for (auto& ch : waves) {
      for (int i = 0; i < spec.waves; ++i) {
        // Frequencies in cycles per HR pixel with a falling spectrum; the top
        // of the band sits above the LR Nyquist limit, so LR frames alias.
        const double f = spec.min_frequency + (spec.max_frequency - spec.min_frequency) * unit(rng);
        const double theta = two_pi * unit(rng);
        const double falloff = std::sqrt(spec.min_frequency / f);
        ch.push_back({f * std::cos(theta), f * std::sin(theta), two_pi * unit(rng), amp * falloff * (0.5 + unit(rng))});
      }
    }
    const double speed = spec.max_speed * unit(rng);
    const double dir = two_pi * unit(rng);
    const double vx = speed * std::cos(dir);  // LR pixels per frame
    const double vy = speed * std::sin(dir);

    auto frames = std::make_shared<std::vector<Frame>>();
    for (int t = 0; t < spec.frames; ++t) {
      // Content at HR position p in frame 0 sits at p + s*v*t in frame t.
      const double ox = -vx * spec.scale * t;
      const double oy = -vy * spec.scale * t;
      Frame f = make_frame(spec.hr_height, spec.hr_width);
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < spec.hr_height; ++y) {
          for (int x = 0; x < spec.hr_width; ++x) {
            double v = 0.5;
            for (const Wave& w : waves[c]) v += w.amp * std::sin(two_pi * (w.fx * (x + ox) + w.fy * (y + oy)) + w.phase);
            f.at(c, y, x) = std::clamp(v, 0.0, 1.0);
          }
        }
      }
      frames->push_back(std::move(f));
    }

    char id[32];
    std::snprintf(id, sizeof(id), "syn%03d", s);
    SequenceRecord rec;
    rec.id = id;
    rec.memory = frames;
    rec.height = spec.hr_height;
    rec.width = spec.hr_width;
    rec.split = "synthetic";

    const int lh = spec.hr_height / spec.scale;
    const int lw = spec.hr_width / spec.scale;
    for (int t = 0; t < spec.frames; ++t) {
      for (int k = 0; k < spec.frames; ++k) {
        if (k == t) continue;
        // Neighbor pixel content moves to the target by v * (t - k).
        const auto u = static_cast<float>(vx * (t - k));
        const auto v = static_cast<float>(vy * (t - k));
        set.flows->put(rec.id, t, k, flow::uniform_flow(lh, lw, u, v));
      }
    }
    set.records.push_back(std::move(rec));
    set.speeds.push_back(speed);
  }
  return set;
}

}  // namespace rbpn
