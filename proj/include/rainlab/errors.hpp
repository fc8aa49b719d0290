#pragma once

#include <stdexcept>
#include <string>

namespace rainlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file contents (bad header, truncated payload, checksum mismatch).
struct FormatError : Error {
  using Error::Error;
};

// Dimension or layout mismatch between arrays that must agree.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid parameter or configuration value.
struct ParamError : Error {
  using Error::Error;
};

// Filesystem-level failure (missing file, unwritable path).
struct IoError : Error {
  using Error::Error;
};

// Dataset violates a contract the pipeline depends on (e.g. no heavy images).
struct DataError : Error {
  using Error::Error;
};

// API misuse caught at runtime.
struct ContractError : Error {
  using Error::Error;
};

}  // namespace rainlab
