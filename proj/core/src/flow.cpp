#include "rbpn/flow.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "rbpn/errors.hpp"

namespace rbpn::flow {

namespace fs = std::filesystem;

FlowField::FlowField(int height, int width) : h_(height), w_(width) {
  if (height < 0 || width < 0) throw ShapeError("negative flow dims");
  uv_.assign(2 * static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0.0f);
}

bool FlowField::all_finite() const noexcept {
  return std::all_of(uv_.begin(), uv_.end(), [](float v) { return std::isfinite(v); });
}

FlowField uniform_flow(int height, int width, float u, float v) {
  FlowField f(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      f.u(y, x) = u;
      f.v(y, x) = v;
    }
  }
  return f;
}

bool bitwise_equal(const FlowField& a, const FlowField& b) {
  if (a.height() != b.height() || a.width() != b.width()) return false;
  const auto x = a.interleaved();
  const auto y = b.interleaved();
  return std::memcmp(x.data(), y.data(), x.size_bytes()) == 0;
}

Tensor to_tensor(const FlowField& f) {
  Tensor t(Shape{2, f.height(), f.width()});
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      t.at(0, y, x) = f.u(y, x);
      t.at(1, y, x) = f.v(y, x);
    }
  }
  return t;
}

FlowField crop(const FlowField& f, int y, int x, int h, int w) {
  if (y < 0 || x < 0 || h < 0 || w < 0 || y + h > f.height() || x + w > f.width()) {
    throw ShapeError("flow crop window out of range");
  }
  FlowField out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out.u(r, c) = f.u(y + r, x + c);
      out.v(r, c) = f.v(y + r, x + c);
    }
  }
  return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::uintmax_t flo_file_size(int height, int width) {
  return 12u + 8u * static_cast<std::uintmax_t>(height) * static_cast<std::uintmax_t>(width);
}

FlowField read_flo(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char header[12];
  if (!in.read(reinterpret_cast<char*>(header), 12)) throw FormatError(path.string() + ": truncated header");
  const float magic = std::bit_cast<float>(get_u32(header));
  if (magic != kFloMagic) throw FormatError(path.string() + ": bad magic (not a Middlebury .flo file)");
  const auto width = static_cast<std::int32_t>(get_u32(header + 4));
  const auto height = static_cast<std::int32_t>(get_u32(header + 8));
  if (width < 1 || height < 1 || width > (1 << 16) || height > (1 << 16)) {
    throw FormatError(path.string() + ": implausible dims " + std::to_string(width) + "x" + std::to_string(height));
  }
  FlowField f(height, width);
  auto uv = f.interleaved();
  std::vector<unsigned char> raw(uv.size() * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw FormatError(path.string() + ": truncated payload");
  }
  for (std::size_t i = 0; i < uv.size(); ++i) uv[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
  return f;
}

void write_flo(const FlowField& field, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  put_u32(out, std::bit_cast<std::uint32_t>(kFloMagic));
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  for (float v : field.interleaved()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw IoError("failed writing " + path.string());
}

FlowField ZeroFlowProvider::get(const FlowRequest& req) const { return FlowField(req.height, req.width); }

PrecomputedDirProvider::PrecomputedDirProvider(fs::path root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) throw LayoutError("flow directory does not exist: " + root_.string());
}

fs::path PrecomputedDirProvider::path_for(const fs::path& root, const std::string& seq, int target, int neighbor) {
  return root / seq / (std::to_string(target) + "_" + std::to_string(neighbor) + ".flo");
}

FlowField PrecomputedDirProvider::get(const FlowRequest& req) const {
  const fs::path p = path_for(root_, req.seq, req.target, req.neighbor);
  if (!fs::exists(p)) {
    throw MissingFlowError("no flow for (seq=" + req.seq + ", t=" + std::to_string(req.target) +
                           ", k=" + std::to_string(req.neighbor) + ") at " + p.string());
  }
  FlowField f = read_flo(p);
  if (f.height() != req.height || f.width() != req.width) {
    throw LayoutError(p.string() + " is " + std::to_string(f.width()) + "x" + std::to_string(f.height()) +
                      ", frames are " + std::to_string(req.width) + "x" + std::to_string(req.height));
  }
  return f;
}

namespace {
std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream in(cmd);
  std::vector<std::string> parts;
  std::string tok;
  while (in >> tok) parts.push_back(tok);
  return parts;
}
}  // namespace

ExternalCmdProvider::ExternalCmdProvider(std::string command, FrameSource frames, fs::path scratch_dir)
    : argv_(split_command(command)), frames_(std::move(frames)), scratch_(std::move(scratch_dir)) {
  if (argv_.empty()) throw ConfigError("empty external flow command");
  if (scratch_.empty()) {
    std::string tmpl = (fs::temp_directory_path() / "rbpn-flow-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw IoError("cannot create scratch directory");
    scratch_ = tmpl;
    owns_scratch_ = true;
  } else {
    fs::create_directories(scratch_);
  }
}

ExternalCmdProvider::~ExternalCmdProvider() {
  if (owns_scratch_) {
    std::error_code ec;
    fs::remove_all(scratch_, ec);
  }
}

FlowField ExternalCmdProvider::get(const FlowRequest& req) const {
  std::lock_guard lock(mu_);
  const fs::path a = scratch_ / "neighbor.png";
  const fs::path b = scratch_ / "target.png";
  const fs::path out = scratch_ / "flow.flo";
  write_png(frames_(req.seq, req.neighbor), a);
  write_png(frames_(req.seq, req.target), b);
  std::error_code ec;
  fs::remove(out, ec);

  std::vector<std::string> args = argv_;
  args.push_back(a.string());
  args.push_back(b.string());
  args.push_back(out.string());
  std::vector<char*> cargs;
  for (auto& s : args) cargs.push_back(s.data());
  cargs.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw SubprocessError("fork failed");
  if (pid == 0) {
    ::execvp(cargs[0], cargs.data());
    ::_exit(127);
  }
  int status = 0;
  if (::waitpid(pid, &status, 0) < 0) throw SubprocessError("waitpid failed");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw SubprocessError("'" + argv_.front() + "' failed for (seq=" + req.seq + ", t=" + std::to_string(req.target) +
                          ", k=" + std::to_string(req.neighbor) + ") with status " +
                          std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  if (!fs::exists(out)) throw SubprocessError("'" + argv_.front() + "' exited 0 but wrote no .flo");
  FlowField f = read_flo(out);
  if (f.height() != req.height || f.width() != req.width) {
    throw SubprocessError("external flow has wrong dims for seq " + req.seq);
  }
  return f;
}

void InMemoryFlowProvider::put(const std::string& seq, int target, int neighbor, FlowField f) {
  flows_[{seq, target, neighbor}] = std::move(f);
}

FlowField InMemoryFlowProvider::get(const FlowRequest& req) const {
  const auto it = flows_.find({req.seq, req.target, req.neighbor});
  if (it == flows_.end()) {
    throw MissingFlowError("no flow for (seq=" + req.seq + ", t=" + std::to_string(req.target) +
                           ", k=" + std::to_string(req.neighbor) + ")");
  }
  return it->second;
}

double mean_flow_magnitude(std::span<const FlowField> fields) {
  if (fields.empty()) throw EmptyInputError("mean_flow_magnitude of an empty list");
  double sum = 0.0;
  std::size_t count = 0;
  for (const FlowField& f : fields) {
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        sum += std::hypot(static_cast<double>(f.u(y, x)), static_cast<double>(f.v(y, x)));
      }
    }
    count += static_cast<std::size_t>(f.height()) * static_cast<std::size_t>(f.width());
  }
  if (count == 0) throw EmptyInputError("mean_flow_magnitude over fields with no pixels");
  return sum / static_cast<double>(count);
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::kSlow:
      return "slow";
    case Tier::kMedium:
      return "medium";
    case Tier::kFast:
      return "fast";
  }
  return "?";
}

std::vector<MotionTier> make_tiers(const TierThresholds& t) {
  if (!(t.slow_medium > 0.0 && t.slow_medium < t.medium_fast && std::isfinite(t.medium_fast))) {
    throw ConfigError("tier thresholds must satisfy 0 < slow_medium < medium_fast < inf");
  }
  return {{Tier::kSlow, 0.0, t.slow_medium},
          {Tier::kMedium, t.slow_medium, t.medium_fast},
          {Tier::kFast, t.medium_fast, std::numeric_limits<double>::infinity()}};
}

Tier stratify(double m, std::span<const MotionTier> tiers) {
  if (!(m >= 0.0)) throw RangeError("flow magnitude must be a non-negative number");
  for (const MotionTier& t : tiers) {
    if (m >= t.lower && m < t.upper) return t.tier;
  }
  throw RangeError("tiers do not cover magnitude " + std::to_string(m));
}

std::vector<Tier> stratify(std::span<const double> magnitudes, std::span<const MotionTier> tiers) {
  std::vector<Tier> out;
  out.reserve(magnitudes.size());
  for (double m : magnitudes) out.push_back(stratify(m, tiers));
  return out;
}

TierThresholds calibrate_thresholds(std::span<const double> magnitudes, int slow_count, int medium_count,
                                    int fast_count) {
  if (slow_count < 1 || medium_count < 1 || fast_count < 1) throw RangeError("tier populations must be positive");
  const std::size_t total = static_cast<std::size_t>(slow_count) + medium_count + fast_count;
  if (magnitudes.size() != total) {
    throw RangeError("calibration needs " + std::to_string(total) + " magnitudes, got " +
                     std::to_string(magnitudes.size()));
  }
  std::vector<double> sorted(magnitudes.begin(), magnitudes.end());
  std::sort(sorted.begin(), sorted.end());
  const auto cut = [&](std::size_t below) {
    const double lo = sorted[below - 1];
    const double hi = sorted[below];
    if (!(lo < hi)) throw RangeError("tied magnitudes straddle a tier boundary; populations are not attainable");
    return 0.5 * (lo + hi);
  };
  TierThresholds t;
  t.slow_medium = cut(static_cast<std::size_t>(slow_count));
  t.medium_fast = cut(static_cast<std::size_t>(slow_count + medium_count));
  if (!(t.slow_medium > 0.0)) throw RangeError("calibrated slow/medium cut must be positive");
  return t;
}

}  // namespace rbpn::flow
