#include "rbpn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "rbpn/errors.hpp"
#include "rbpn/resize.hpp"

namespace rbpn {

namespace fs = std::filesystem;

std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::kVimeo90k:
      return "VIMEO90K";
    case DatasetKind::kFrameDir:
      return "FRAMEDIR";
    case DatasetKind::kSynthetic:
      return "SYNTHETIC";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view s) {
  std::string up(s);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "VIMEO90K" || up == "VIMEO") return DatasetKind::kVimeo90k;
  if (up == "FRAMEDIR" || up == "VID4" || up == "SPMCS") return DatasetKind::kFrameDir;
  if (up == "SYNTHETIC") return DatasetKind::kSynthetic;
  throw ConfigError("unknown dataset kind '" + std::string(s) + "'");
}

namespace {

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png";
}

void finish_record(SequenceRecord& rec, int min_frames) {
  if (rec.size() < min_frames) {
    throw EmptySequenceError("sequence '" + rec.id + "' has " + std::to_string(rec.size()) +
                             " frames but the context needs " + std::to_string(min_frames));
  }
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    const auto [h, w] = png_size(rec.frames[i]);
    if (i == 0) {
      rec.height = h;
      rec.width = w;
    } else if (h != rec.height || w != rec.width) {
      throw LayoutError(rec.frames[i].string() + " is " + std::to_string(w) + "x" + std::to_string(h) +
                        " but the sequence is " + std::to_string(rec.width) + "x" + std::to_string(rec.height));
    }
  }
}

std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_png(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SequenceRecord> load_vimeo(const fs::path& root, const std::optional<fs::path>& list_file,
                                       int min_frames) {
  const fs::path list = list_file ? *list_file : root / "sep_testlist.txt";
  std::ifstream in(list);
  if (!in) throw LayoutError("cannot open clip list " + list.string());
  const std::string split = list.stem().string();
  std::vector<SequenceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    SequenceRecord rec;
    rec.id = line;
    rec.split = split;
    const fs::path dir = root / "sequences" / line;
    for (int i = 1; i <= 7; ++i) {
      const fs::path f = dir / ("im" + std::to_string(i) + ".png");
      if (!fs::is_regular_file(f)) throw LayoutError("missing septuplet frame " + f.string());
      rec.frames.push_back(f);
    }
    finish_record(rec, min_frames);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SequenceRecord> load_framedir(const fs::path& root, int min_frames) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<SequenceRecord> out;
  if (dirs.empty()) {
    // A bare directory of frames is a single clip.
    SequenceRecord rec;
    rec.id = root.filename().string();
    rec.frames = png_files(root);
    finish_record(rec, min_frames);
    out.push_back(std::move(rec));
    return out;
  }
  for (const fs::path& d : dirs) {
    SequenceRecord rec;
    rec.id = d.filename().string();
    rec.frames = png_files(d);
    if (rec.frames.empty()) throw EmptySequenceError("sequence directory " + d.string() + " holds no PNG frames");
    finish_record(rec, min_frames);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<SequenceRecord> load_dataset(DatasetKind kind, const fs::path& root,
                                         const std::optional<fs::path>& list_file, int min_frames) {
  if (!fs::is_directory(root)) throw LayoutError("dataset root " + root.string() + " is not a directory");
  std::vector<SequenceRecord> out;
  switch (kind) {
    case DatasetKind::kVimeo90k:
      out = load_vimeo(root, list_file, min_frames);
      break;
    case DatasetKind::kFrameDir:
      out = load_framedir(root, min_frames);
      break;
    case DatasetKind::kSynthetic:
      throw ConfigError("synthetic datasets are generated, not loaded from disk");
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

Frame load_hr_frame(const SequenceRecord& rec, int index) {
  if (index < 0 || index >= rec.size()) {
    throw RangeError("frame " + std::to_string(index) + " outside sequence '" + rec.id + "'");
  }
  if (rec.memory) return (*rec.memory)[static_cast<std::size_t>(index)];
  return read_png(rec.frames[static_cast<std::size_t>(index)]);
}

Frame modcrop(const Frame& f, int scale) {
  const int h = f.height() - f.height() % scale;
  const int w = f.width() - f.width() % scale;
  if (h == f.height() && w == f.width()) return f;
  return crop(f, 0, 0, h, w);
}

Frame degrade(const Frame& hr, int scale) {
  return bicubic_resize(hr, hr.height() / scale, hr.width() / scale, 1.0 / scale);
}

SequenceView::SequenceView(const SequenceRecord& rec, int scale)
    : rec_(&rec), scale_(scale), lr_(static_cast<std::size_t>(rec.size())) {}

Frame SequenceView::hr(int index) const { return modcrop(load_hr_frame(*rec_, index), scale_); }

const Frame& SequenceView::lr(int index) const {
  auto& slot = lr_.at(static_cast<std::size_t>(index));
  if (!slot) slot = degrade(hr(index), scale_);
  return *slot;
}

TrainSample make_sample(const SequenceView& seq, const ContextPlan& plan, const flow::FlowProvider* flows) {
  TrainSample s;
  s.lr_target = seq.lr(plan.target);
  s.hr_target = seq.hr(plan.target);
  for (int k : plan.neighbors) {
    s.lr_neighbors.push_back(seq.lr(k));
    if (flows != nullptr) {
      flow::FlowField f = flows->get({seq.record().id, plan.target, k, s.lr_target.height(), s.lr_target.width()});
      if (f.height() != s.lr_target.height() || f.width() != s.lr_target.width()) {
        throw ShapeError("flow for '" + seq.record().id + "' " + std::to_string(plan.target) + "_" +
                         std::to_string(k) + " does not match the LR frame size");
      }
      s.flows.push_back(std::move(f));
    }
  }
  return s;
}

AugmentOps random_augment_ops(std::mt19937_64& rng) {
  const std::uint64_t bits = rng();
  return {(bits & 1U) != 0, (bits & 2U) != 0, static_cast<int>((bits >> 2) & 3U)};
}

Tensor hflip(const Tensor& t) {
  Tensor out(t.shape());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out.at(c, y, t.width() - 1 - x) = t.at(c, y, x);
  return out;
}

Tensor vflip(const Tensor& t) {
  Tensor out(t.shape());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out.at(c, t.height() - 1 - y, x) = t.at(c, y, x);
  return out;
}

Tensor rot90(const Tensor& t) {
  Tensor out(Shape{t.channels(), t.width(), t.height()});
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out.at(c, x, t.height() - 1 - y) = t.at(c, y, x);
  return out;
}

flow::FlowField hflip(const flow::FlowField& f) {
  flow::FlowField out(f.height(), f.width());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      out.u(y, f.width() - 1 - x) = -f.u(y, x);
      out.v(y, f.width() - 1 - x) = f.v(y, x);
    }
  }
  return out;
}

flow::FlowField vflip(const flow::FlowField& f) {
  flow::FlowField out(f.height(), f.width());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      out.u(f.height() - 1 - y, x) = f.u(y, x);
      out.v(f.height() - 1 - y, x) = -f.v(y, x);
    }
  }
  return out;
}

flow::FlowField rot90(const flow::FlowField& f) {
  flow::FlowField out(f.width(), f.height());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      out.u(x, f.height() - 1 - y) = -f.v(y, x);
      out.v(x, f.height() - 1 - y) = f.u(y, x);
    }
  }
  return out;
}

namespace {

template <typename T>
T apply_ops(const T& in, const AugmentOps& ops) {
  T out = ops.hflip ? hflip(in) : in;
  if (ops.vflip) out = vflip(out);
  for (int i = 0; i < ops.rot90; ++i) out = rot90(out);
  return out;
}

}  // namespace

TrainSample augment(const TrainSample& sample, const AugmentOps& ops) {
  if (ops.rot90 < 0 || ops.rot90 > 3) throw RangeError("rot90 must be 0..3 quarter turns");
  TrainSample out;
  out.lr_target = apply_ops(sample.lr_target, ops);
  out.hr_target = apply_ops(sample.hr_target, ops);
  for (const Frame& f : sample.lr_neighbors) out.lr_neighbors.push_back(apply_ops(f, ops));
  for (const flow::FlowField& f : sample.flows) out.flows.push_back(apply_ops(f, ops));
  out.origin_x = sample.origin_x;
  out.origin_y = sample.origin_y;
  return out;
}

TrainSample augment(const TrainSample& sample, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return augment(sample, random_augment_ops(rng));
}

TrainSample crop_sample(const TrainSample& sample, int x, int y, int patch_lr, int scale) {
  const int h = sample.lr_target.height();
  const int w = sample.lr_target.width();
  if (patch_lr > h || patch_lr > w) {
    throw PatchTooLargeError("patch " + std::to_string(patch_lr) + " does not fit an LR frame of " +
                             std::to_string(w) + "x" + std::to_string(h));
  }
  if (sample.hr_target.height() != h * scale || sample.hr_target.width() != w * scale) {
    throw ShapeError("HR target is not " + std::to_string(scale) + "x the LR target");
  }
  TrainSample out;
  out.lr_target = crop(sample.lr_target, y, x, patch_lr, patch_lr);
  out.hr_target = crop(sample.hr_target, y * scale, x * scale, patch_lr * scale, patch_lr * scale);
  for (const Frame& f : sample.lr_neighbors) out.lr_neighbors.push_back(crop(f, y, x, patch_lr, patch_lr));
  for (const flow::FlowField& f : sample.flows) out.flows.push_back(flow::crop(f, y, x, patch_lr, patch_lr));
  out.origin_x = sample.origin_x + x;
  out.origin_y = sample.origin_y + y;
  return out;
}

TrainSample sample_patch(const TrainSample& sample, int patch_lr, int scale, std::mt19937_64& rng) {
  const int h = sample.lr_target.height();
  const int w = sample.lr_target.width();
  if (patch_lr < 1 || patch_lr > h || patch_lr > w) {
    throw PatchTooLargeError("patch " + std::to_string(patch_lr) + " does not fit an LR frame of " +
                             std::to_string(w) + "x" + std::to_string(h));
  }
  const auto span_x = static_cast<std::uint64_t>(w - patch_lr + 1);
  const auto span_y = static_cast<std::uint64_t>(h - patch_lr + 1);
  const int x = static_cast<int>(rng() % span_x);
  const int y = static_cast<int>(rng() % span_y);
  return crop_sample(sample, x, y, patch_lr, scale);
}

TrainSample sample_patch(const TrainSample& sample, int patch_lr, int scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_patch(sample, patch_lr, scale, rng);
}

}  // namespace rbpn
