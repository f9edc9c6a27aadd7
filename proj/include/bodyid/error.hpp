#pragma once

#include <stdexcept>
#include <string>

namespace bodyid {

// Base class for all library failures.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value (bad dimensions, out-of-range knob, unknown key).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Array/matrix dimension mismatch between arguments.
class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid or degenerate runtime data (empty cloud, empty mask, zero-norm vector).
class DataError : public Error {
public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Optimization produced a non-finite loss.
class DivergenceError : public Error {
public:
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

// File or stream failure.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace bodyid
