#pragma once

#include <stdexcept>
#include <string>

namespace skelssl {

// Base type for everything the library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape contracts between matrices (inner dimensions, broadcast widths, ...).
struct DimensionError : Error {
  using Error::Error;
};

// Non-finite values, degenerate inputs, anything that poisons the math.
struct NumericError : Error {
  using Error::Error;
};

// Zero-norm vector fed to a similarity that divides by the norm.
struct DegenerateVectorError : NumericError {
  using NumericError::NumericError;
};

// Malformed or inconsistent data files, labels out of range, bad splits.
struct DataError : Error {
  using Error::Error;
};

// Invalid run configuration (unknown keys, out-of-range settings).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace skelssl
