#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace eegart {

// Little-endian IEEE-754 binary32, independent of host byte order.
void append_f32_le(std::vector<std::uint8_t>& out, std::span<const float> values);
std::vector<float> parse_f32_le(std::span<const std::uint8_t> bytes);

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint64_t parse_u64_le(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace eegart
