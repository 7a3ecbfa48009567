#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace eegart {

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace eegart
