#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "eegart/nn/tensor.hpp"
#include "eegart/util/errors.hpp"

namespace eegart::nn {

inline constexpr int kWeightFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

// Container layout:
//   8 bytes   magic "EEGARTWF"
//   8 bytes   manifest length N, little-endian u64
//   N bytes   manifest JSON: header fields + format_version + tensors[]
//             (name, shape, offset, nbytes, sha256 per tensor)
//   ...       tensor blobs, little-endian IEEE-754 binary32, in manifest order
//   64 bytes  lower-case hex SHA-256 of everything before it
struct WeightFile {
  nlohmann::json header = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> encode_weight_file(const WeightFile& file);
// Throws FormatError on bad magic, unsupported version, truncation or a
// checksum mismatch (file digest or per-tensor).
WeightFile decode_weight_file(std::span<const std::uint8_t> bytes);

void write_weight_file(const std::filesystem::path& path, const WeightFile& file);
WeightFile read_weight_file(const std::filesystem::path& path);

}  // namespace eegart::nn
