#include "doctest.h"

#include <filesystem>

#include "eegart/nn/weights.hpp"
#include "eegart/util/binary_io.hpp"
#include "eegart/util/rng.hpp"

using namespace eegart::nn;

namespace {
WeightFile sample_file() {
  eegart::Rng rng(1);
  WeightFile f;
  f.header = {{"model_kind", "cnn_cbam"}, {"rng_seed", 42}, {"operating_threshold", 0.37}};
  for (const char* name : {"a.weight", "a.bias", "b.gamma"}) {
    Tensor<float> t({3, 4});
    for (auto& v : t.data()) v = static_cast<float>(rng.normal());
    f.tensors.push_back({name, t});
  }
  f.tensors[1].tensor.data()[0] = -0.0f;
  f.tensors[1].tensor.data()[1] = 1e-40f;  // subnormal
  return f;
}
}  // namespace

TEST_CASE("weight file write-read-write is bit exact") {
  const auto bytes = encode_weight_file(sample_file());
  const auto decoded = decode_weight_file(bytes);
  CHECK(decoded.header["model_kind"] == "cnn_cbam");
  CHECK(decoded.tensors.size() == 3);
  CHECK(std::signbit(decoded.tensors[1].tensor[0]));
  CHECK(encode_weight_file(decoded) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "eegart_test.weights";
  write_weight_file(path, decoded);
  CHECK(eegart::read_file_bytes(path) == bytes);
  CHECK(encode_weight_file(read_weight_file(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("tampering and malformed containers are rejected") {
  const auto bytes = encode_weight_file(sample_file());
  auto flipped = bytes;
  flipped[bytes.size() - 5] ^= 0x01;
  CHECK_THROWS_AS(decode_weight_file(flipped), eegart::FormatError);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_weight_file(magic), eegart::FormatError);

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 4);
  CHECK_THROWS_AS(decode_weight_file(truncated), eegart::FormatError);

  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_weight_file(extra), eegart::FormatError);

  WeightFile v2 = sample_file();
  auto enc = encode_weight_file(v2);
  std::string s(enc.begin(), enc.end());
  const auto pos = s.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  enc[pos + 17] = '2';
  CHECK_THROWS_AS(decode_weight_file(enc), eegart::FormatError);

  // The version check runs before the digest so the message names the version.
  try {
    decode_weight_file(enc);
  } catch (const eegart::FormatError& e) {
    CHECK(std::string(e.what()).find("format_version 2") != std::string::npos);
  }
}

TEST_CASE("every single-byte change is detected") {
  const auto bytes = encode_weight_file(sample_file());
  std::size_t detected = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto t = bytes;
    t[i] ^= 0x04;
    try {
      decode_weight_file(t);
    } catch (const eegart::FormatError&) {
      ++detected;
    }
  }
  CHECK(detected == bytes.size());

  // A plausible header edit, not just corruption.
  std::string s(bytes.begin(), bytes.end());
  const auto pos = s.find("0.37");
  REQUIRE(pos != std::string::npos);
  auto edited = bytes;
  edited[pos + 3] = '8';
  CHECK_THROWS_AS(decode_weight_file(edited), eegart::FormatError);
}
