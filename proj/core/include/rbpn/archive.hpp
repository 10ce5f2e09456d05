#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rbpn/layers.hpp"

namespace rbpn {

// Named-tensor archive. Layout (all little-endian):
//   "RBPNARC1"                       8 bytes
//   uint32 tensor_count
//   per tensor:
//     uint32 name_len, name bytes (UTF-8, no terminator)
//     uint32 rank, uint32 dims[rank]
//     float32 values[prod(dims)]
struct NamedTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<float> values;
};

void write_archive(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_archive(const std::filesystem::path& path);

std::vector<NamedTensor> export_params(const nn::ParamRefs& params);
// Names and dims must match one-to-one; throws FormatError otherwise.
void import_params(const nn::ParamRefs& params, const std::vector<NamedTensor>& tensors);

// Full double-precision dump of parameter values, same framing but magic
// "RBPNDBL1" and float64 payloads. Used for exact checkpoint resume.
void write_double_blob(const std::filesystem::path& path, const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> read_double_blob(const std::filesystem::path& path);

}  // namespace rbpn
