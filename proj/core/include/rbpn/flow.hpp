#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rbpn/image.hpp"
#include "rbpn/tensor.hpp"

namespace rbpn::flow {

// Dense displacement field at LR resolution. Vector (u, v) at a neighbor
// pixel points to where that content sits in the target frame.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width);  // zero-filled

  int height() const noexcept { return h_; }
  int width() const noexcept { return w_; }

  float& u(int y, int x) noexcept { return uv_[idx(y, x)]; }
  float& v(int y, int x) noexcept { return uv_[idx(y, x) + 1]; }
  float u(int y, int x) const noexcept { return uv_[idx(y, x)]; }
  float v(int y, int x) const noexcept { return uv_[idx(y, x) + 1]; }

  // Row-major interleaved (u, v) pairs, exactly the .flo payload order.
  std::span<float> interleaved() noexcept { return uv_; }
  std::span<const float> interleaved() const noexcept { return uv_; }

  bool all_finite() const noexcept;

 private:
  std::size_t idx(int y, int x) const noexcept {
    return 2 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x));
  }
  int h_ = 0;
  int w_ = 0;
  std::vector<float> uv_;
};

FlowField uniform_flow(int height, int width, float u, float v);
// Compares the raw float bits, so NaNs and signed zeros count.
bool bitwise_equal(const FlowField& a, const FlowField& b);
// 2 x H x W tensor: channel 0 = u, channel 1 = v.
Tensor to_tensor(const FlowField& f);
FlowField crop(const FlowField& f, int y, int x, int h, int w);

// Middlebury .flo: float 202021.25, int32 width, int32 height, then
// height*width interleaved float32 (u, v); all little-endian.
inline constexpr float kFloMagic = 202021.25f;
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& field, const std::filesystem::path& path);
std::uintmax_t flo_file_size(int height, int width);

struct FlowRequest {
  std::string seq;
  int target = 0;
  int neighbor = 0;
  int height = 0;  // LR dims the flow must match
  int width = 0;
};

class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  virtual FlowField get(const FlowRequest& req) const = 0;
};

// All-zero flow of the requested dims. Never fails.
class ZeroFlowProvider final : public FlowProvider {
 public:
  FlowField get(const FlowRequest& req) const override;
};

// Reads `<root>/<seq>/<target>_<neighbor>.flo`.
class PrecomputedDirProvider final : public FlowProvider {
 public:
  explicit PrecomputedDirProvider(std::filesystem::path root);
  FlowField get(const FlowRequest& req) const override;
  static std::filesystem::path path_for(const std::filesystem::path& root, const std::string& seq, int target,
                                        int neighbor);

 private:
  std::filesystem::path root_;
};

using FrameSource = std::function<Frame(const std::string& seq, int index)>;

// Runs `<cmd> <neighbor.png> <target.png> <out.flo>` per request. Calls on one
// instance are serialized.
class ExternalCmdProvider final : public FlowProvider {
 public:
  ExternalCmdProvider(std::string command, FrameSource frames, std::filesystem::path scratch_dir = {});
  ~ExternalCmdProvider() override;
  FlowField get(const FlowRequest& req) const override;

 private:
  std::vector<std::string> argv_;
  FrameSource frames_;
  std::filesystem::path scratch_;
  bool owns_scratch_ = false;
  mutable std::mutex mu_;
};

// Flows held in memory, keyed like the precomputed layout.
class InMemoryFlowProvider final : public FlowProvider {
 public:
  void put(const std::string& seq, int target, int neighbor, FlowField f);
  FlowField get(const FlowRequest& req) const override;

 private:
  std::map<std::tuple<std::string, int, int>, FlowField> flows_;
};

// Mean of sqrt(u^2 + v^2) over every pixel of every field.
double mean_flow_magnitude(std::span<const FlowField> fields);

enum class Tier { kSlow = 0, kMedium = 1, kFast = 2 };
std::string_view to_string(Tier t);

struct MotionTier {
  Tier tier;
  double lower;  // inclusive
  double upper;  // exclusive; +inf for the last tier
};

// Cut points between slow|medium and medium|fast in pixels/frame.
struct TierThresholds {
  double slow_medium = 1.22;
  double medium_fast = 4.56;
};

std::vector<MotionTier> make_tiers(const TierThresholds& t);
Tier stratify(double mean_magnitude, std::span<const MotionTier> tiers);
std::vector<Tier> stratify(std::span<const double> magnitudes, std::span<const MotionTier> tiers);

// Cut points that split `magnitudes` into groups of exactly the requested
// sizes (ascending order). Throws RangeError when sizes do not add up or a
// tie straddles a cut.
TierThresholds calibrate_thresholds(std::span<const double> magnitudes, int slow_count, int medium_count,
                                    int fast_count);

}  // namespace rbpn::flow
