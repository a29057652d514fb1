#pragma once

#include <stdexcept>
#include <string>

namespace vsp {

/// Invalid or inconsistent configuration (unknown keys, bad units, missing
/// references). Carries the 1-based source line when known.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Malformed measured-data input (spectrum CSV, relaxation series).
class IngestionError : public std::runtime_error {
public:
  explicit IngestionError(const std::string& what, int row = 0)
      : std::runtime_error(row > 0 ? "row " + std::to_string(row) + ": " + what : what),
        row_(row) {}
  int row() const noexcept { return row_; }

private:
  int row_;
};

/// Numerical failure: integrator step underflow, non-finite model output.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace vsp
