#pragma once

#include <stdexcept>
#include <string>

namespace distagg {

/// Base class for every error raised by the library. The C API maps each
/// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files, duplicate keys, invariant violations in data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Metric applied to an unsupported label variant, or returning NaN/negative.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Bad option values, unknown config keys, unknown method names.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite objective during optimization, degenerate merges.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace distagg
