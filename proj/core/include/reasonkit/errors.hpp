#pragma once

#include <stdexcept>
#include <string>

namespace rk {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem problems: missing, unreadable or unwritable files.
struct IoError : Error {
  using Error::Error;
};

// Malformed or degenerate data: empty corpora, unknown relations,
// schema violations, undefined metrics.
struct DataError : Error {
  using Error::Error;
};

// Inconsistent configuration: shape mismatches, invalid hyperparameters.
struct ConfigError : Error {
  using Error::Error;
};

// Numeric failure during training (NaN/Inf loss).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace rk
