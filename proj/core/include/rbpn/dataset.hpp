#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rbpn/flow.hpp"
#include "rbpn/image.hpp"
#include "rbpn/model.hpp"

namespace rbpn {

enum class DatasetKind { kVimeo90k, kFrameDir, kSynthetic };
std::string_view to_string(DatasetKind k);
DatasetKind parse_dataset_kind(std::string_view s);

// One video clip. Frames either live on disk (`frames`) or in memory
// (`memory`, used by the synthetic generator and tests).
struct SequenceRecord {
  std::string id;
  std::vector<std::filesystem::path> frames;
  std::shared_ptr<const std::vector<Frame>> memory;
  int height = 0;  // HR dims
  int width = 0;
  std::string split;

  int size() const noexcept {
    return memory ? static_cast<int>(memory->size()) : static_cast<int>(frames.size());
  }
};

// VIMEO90K: `<root>/sequences/<a>/<b>/im1.png..im7.png`, clips listed one
// `<a>/<b>` per line in `list_file` (default `<root>/sep_testlist.txt`).
// FRAMEDIR: every subdirectory of `root` is a clip of lexicographically
// ordered PNG frames. Records come back sorted by id.
// Throws LayoutError (bad layout, mixed resolution) or EmptySequenceError
// (fewer than `min_frames` frames).
std::vector<SequenceRecord> load_dataset(DatasetKind kind, const std::filesystem::path& root,
                                         const std::optional<std::filesystem::path>& list_file = std::nullopt,
                                         int min_frames = 1);

Frame load_hr_frame(const SequenceRecord& rec, int index);
// Crop the bottom/right so both dims are multiples of `scale`.
Frame modcrop(const Frame& f, int scale);
// Bicubic downscale of a modcropped HR frame.
Frame degrade(const Frame& hr, int scale);

// Per-sequence LR frame cache with flow lookup, shared by training and
// evaluation.
class SequenceView {
 public:
  SequenceView(const SequenceRecord& rec, int scale);

  const SequenceRecord& record() const noexcept { return *rec_; }
  int size() const noexcept { return rec_->size(); }
  int scale() const noexcept { return scale_; }
  Frame hr(int index) const;
  const Frame& lr(int index) const;

 private:
  const SequenceRecord* rec_;
  int scale_;
  mutable std::vector<std::optional<Frame>> lr_;
};

struct TrainSample {
  Frame lr_target;
  std::vector<Frame> lr_neighbors;
  std::vector<flow::FlowField> flows;
  Frame hr_target;
  int origin_x = 0;  // LR crop origin inside the full frame
  int origin_y = 0;
};

// Full-frame sample for target `plan.target`. Flows are requested from
// `flows` (skip by passing nullptr).
TrainSample make_sample(const SequenceView& seq, const ContextPlan& plan, const flow::FlowProvider* flows);

struct AugmentOps {
  bool hflip = false;
  bool vflip = false;
  int rot90 = 0;  // quarter turns, 0..3
};

AugmentOps random_augment_ops(std::mt19937_64& rng);

// Spatial ops on single frames / fields. rot90 maps the pixel at (y, x) to
// (x, H - 1 - y), so (u, v) becomes (-v, u).
Tensor hflip(const Tensor& t);
Tensor vflip(const Tensor& t);
Tensor rot90(const Tensor& t);
flow::FlowField hflip(const flow::FlowField& f);
flow::FlowField vflip(const flow::FlowField& f);
flow::FlowField rot90(const flow::FlowField& f);

// Applies hflip, then vflip, then `rot90` quarter turns to every frame and
// flow field of the sample.
TrainSample augment(const TrainSample& sample, const AugmentOps& ops);
TrainSample augment(const TrainSample& sample, std::uint64_t seed);

// Random aligned crop: LR origin (x, y) pairs with HR origin (s*x, s*y).
// Throws PatchTooLargeError when patch_lr exceeds an LR dim.
TrainSample sample_patch(const TrainSample& sample, int patch_lr, int scale, std::mt19937_64& rng);
TrainSample sample_patch(const TrainSample& sample, int patch_lr, int scale, std::uint64_t seed);
TrainSample crop_sample(const TrainSample& sample, int x, int y, int patch_lr, int scale);

}  // namespace rbpn
