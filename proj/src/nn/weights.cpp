#include "eegart/nn/weights.hpp"

#include <cstring>

#include "eegart/util/binary_io.hpp"
#include "eegart/util/sha256.hpp"

namespace eegart::nn {

namespace {

constexpr char kMagic[8] = {'E', 'E', 'G', 'A', 'R', 'T', 'W', 'F'};
constexpr std::size_t kDigestChars = 64;

}  // namespace

std::vector<std::uint8_t> encode_weight_file(const WeightFile& file) {
  if (!file.header.is_object()) throw std::invalid_argument("weight header must be a JSON object");
  std::vector<std::uint8_t> blobs;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& nt : file.tensors) {
    if (nt.name.empty()) throw std::invalid_argument("weight tensor with empty name");
    const std::size_t offset = blobs.size();
    append_f32_le(blobs, nt.tensor.data());
    const std::span<const std::uint8_t> blob(blobs.data() + offset, blobs.size() - offset);
    entries.push_back({{"name", nt.name},
                       {"shape", nt.tensor.shape()},
                       {"offset", offset},
                       {"nbytes", blob.size()},
                       {"sha256", sha256_hex(blob)}});
  }
  nlohmann::json manifest = file.header;
  manifest["format_version"] = kWeightFormatVersion;
  manifest["tensors"] = std::move(entries);
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  append_u64_le(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blobs.begin(), blobs.end());
  const std::string digest = sha256_hex(out);
  out.insert(out.end(), digest.begin(), digest.end());
  return out;
}

WeightFile decode_weight_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw FormatError("weight file: bad magic");
  }
  if (bytes.size() < 16 + kDigestChars) throw FormatError("weight file: truncated");
  const auto body = bytes.first(bytes.size() - kDigestChars);
  const auto trailer = bytes.last(kDigestChars);
  const std::uint64_t mlen = parse_u64_le(bytes.subspan(8, 8));
  if (mlen > body.size() - 16) throw FormatError("weight file: truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + mlen);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight file: malformed manifest: ") + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("format_version") ||
      !manifest["format_version"].is_number_integer()) {
    throw FormatError("weight file: missing format_version");
  }
  const int version = manifest["format_version"].get<int>();
  if (version != kWeightFormatVersion) {
    throw FormatError("weight file: unsupported format_version " + std::to_string(version));
  }
  if (sha256_hex(body) != std::string(trailer.begin(), trailer.end())) {
    throw FormatError("weight file: checksum mismatch (file digest)");
  }
  if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
    throw FormatError("weight file: missing tensor table");
  }

  const auto payload = body.subspan(16 + mlen);
  WeightFile out;
  std::size_t expected_end = 0;
  try {
    for (const auto& e : manifest["tensors"]) {
      const auto name = e.at("name").get<std::string>();
      const auto shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto nbytes = e.at("nbytes").get<std::size_t>();
      const auto digest = e.at("sha256").get<std::string>();
      if (nbytes != 4 * shape_size(shape)) {
        throw FormatError("weight file: size mismatch for " + name);
      }
      if (offset > payload.size() || nbytes > payload.size() - offset) {
        throw FormatError("weight file: truncated blob for " + name);
      }
      const auto blob = payload.subspan(offset, nbytes);
      if (sha256_hex(blob) != digest) throw FormatError("weight file: checksum mismatch for " + name);
      out.tensors.push_back({name, Tensor<float>(shape, parse_f32_le(blob))});
      expected_end = std::max(expected_end, offset + nbytes);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight file: malformed tensor entry: ") + e.what());
  }
  if (expected_end != payload.size()) throw FormatError("weight file: trailing bytes after blobs");

  manifest.erase("tensors");
  manifest.erase("format_version");
  out.header = std::move(manifest);
  return out;
}

void write_weight_file(const std::filesystem::path& path, const WeightFile& file) {
  const auto bytes = encode_weight_file(file);
  write_file_atomic(path, std::span<const std::uint8_t>(bytes));
}

WeightFile read_weight_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_weight_file(bytes);
}

}  // namespace eegart::nn
