#include "rbpn/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "rbpn/errors.hpp"

namespace rbpn {

namespace {

constexpr char kFloatMagic[8] = {'R', 'B', 'P', 'N', 'A', 'R', 'C', '1'};
constexpr char kDoubleMagic[8] = {'R', 'B', 'P', 'N', 'D', 'B', 'L', '1'};

template <typename U>
void put_le(std::ostream& out, U v) {
  char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, sizeof(U));
}

template <typename U>
U get_le(std::istream& in, const std::string& where) {
  unsigned char b[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(U))) throw FormatError(where + ": truncated archive");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

void put_header(std::ostream& out, const std::string& name, const std::vector<int>& dims) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
}

std::size_t get_header(std::istream& in, const std::string& where, std::string& name, std::vector<int>& dims) {
  const auto len = get_le<std::uint32_t>(in, where);
  if (len > 4096) throw FormatError(where + ": implausible tensor name length");
  name.resize(len);
  if (!in.read(name.data(), len)) throw FormatError(where + ": truncated tensor name");
  const auto rank = get_le<std::uint32_t>(in, where);
  if (rank > 8) throw FormatError(where + ": implausible tensor rank");
  dims.resize(rank);
  std::size_t count = 1;
  for (auto& d : dims) {
    d = static_cast<int>(get_le<std::uint32_t>(in, where));
    if (d < 0 || d > (1 << 24)) throw FormatError(where + ": implausible tensor dim");
    count *= static_cast<std::size_t>(d);
  }
  return count;
}

void check_magic(std::istream& in, const char* magic, const std::string& where) {
  char m[8];
  if (!in.read(m, 8) || std::memcmp(m, magic, 8) != 0) throw FormatError(where + ": bad archive magic");
}

std::vector<int> storage_dims(const Shape& s) { return {s.c, s.h, s.w}; }

}  // namespace

void write_archive(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kFloatMagic, 8);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    put_header(out, t.name, t.dims);
    for (float v : t.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<NamedTensor> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string();
  check_magic(in, kFloatMagic, where);
  const auto count = get_le<std::uint32_t>(in, where);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::size_t n = get_header(in, where, t.name, t.dims);
    t.values.resize(n);
    for (float& v : t.values) v = std::bit_cast<float>(get_le<std::uint32_t>(in, where));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<NamedTensor> export_params(const nn::ParamRefs& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const nn::Parameter* p : params) {
    NamedTensor t{p->name, p->dims, {}};
    const Tensor& v = p->var.value();
    t.values.reserve(v.numel());
    for (double x : v.values()) t.values.push_back(static_cast<float>(x));
    out.push_back(std::move(t));
  }
  return out;
}

void import_params(const nn::ParamRefs& params, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const NamedTensor& t : tensors) by_name[t.name] = &t;
  if (by_name.size() != params.size()) {
    throw FormatError("archive holds " + std::to_string(by_name.size()) + " tensors, model has " +
                      std::to_string(params.size()));
  }
  for (nn::Parameter* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError("archive is missing tensor " + p->name);
    if (it->second->dims != p->dims || it->second->values.size() != p->numel()) {
      throw FormatError("tensor " + p->name + " has mismatched shape in archive");
    }
    Tensor& dst = p->var.mutable_value();
    for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] = static_cast<double>(it->second->values[i]);
  }
}

void write_double_blob(const std::filesystem::path& path, const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kDoubleMagic, 8);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_header(out, name, storage_dims(t.shape()));
    for (double v : t.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::pair<std::string, Tensor>> read_double_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string();
  check_magic(in, kDoubleMagic, where);
  const auto count = get_le<std::uint32_t>(in, where);
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    std::vector<int> dims;
    get_header(in, where, name, dims);
    if (dims.size() != 3) throw FormatError(where + ": double blob tensors must be rank 3");
    Tensor t(Shape{dims[0], dims[1], dims[2]});
    for (double& v : t.values()) v = std::bit_cast<double>(get_le<std::uint64_t>(in, where));
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace rbpn
