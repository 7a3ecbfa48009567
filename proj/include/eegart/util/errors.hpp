#pragma once

#include <stdexcept>
#include <string>

namespace eegart {

// A file on disk does not follow its documented format (bad magic, version
// mismatch, checksum failure, truncated payload, malformed sidecar).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eegart
