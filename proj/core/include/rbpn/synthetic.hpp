#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rbpn/dataset.hpp"

namespace rbpn {

// Procedural clips: a band-limited random texture translating at a constant
// per-clip velocity, so the LR flow between any two frames is known exactly.
struct SyntheticSpec {
  int sequences = 4;
  int frames = 7;
  int hr_height = 64;
  int hr_width = 64;
  int scale = 4;
  double max_speed = 2.0;  // LR pixels per frame
  int waves = 24;          // sinusoids per channel
  double min_frequency = 0.01;  // cycles per HR pixel
  double max_frequency = 0.2;
  std::uint64_t seed = 1;
};

struct SyntheticSet {
  std::vector<SequenceRecord> records;
  std::shared_ptr<flow::InMemoryFlowProvider> flows;
  std::vector<double> speeds;  // LR pixels per frame, one per record
};

// Every ordered frame pair of every clip gets an exact flow entry.
SyntheticSet make_synthetic(const SyntheticSpec& spec);

}  // namespace rbpn
