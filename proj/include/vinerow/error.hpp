#pragma once

#include <stdexcept>
#include <string>

namespace vinerow {

/// Raster sizes disagree, or a map does not match the configured frame.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition on the inputs of an operation was violated.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file on disk does not follow the expected raster/manifest/config format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value (scenario file, CLI override, parameter range).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace vinerow
