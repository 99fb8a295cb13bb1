#pragma once

#include <stdexcept>
#include <string>

namespace qaoi {

// State space would not fit the platform's index range.
struct SizingError : std::length_error {
  using std::length_error::length_error;
};

// Iterative solver ran out of its sweep or round budget.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual_, long sweeps_)
      : std::runtime_error(what), residual(residual_), sweeps(sweeps_) {}
  double residual = 0.0;
  long sweeps = 0;
};

// Bad scenario config or malformed input file.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what, long line_ = 0)
      : std::runtime_error(line_ > 0 ? what + " (line " + std::to_string(line_) + ")" : what),
        line(line_) {}
  long line = 0;  // 1-based, 0 when not tied to a file location
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qaoi
