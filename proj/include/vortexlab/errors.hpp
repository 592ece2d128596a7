#pragma once

#include <stdexcept>
#include <string>

namespace vortexlab {

/// Argument outside the mathematical domain of an operation (poles, x = 0 for G, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Parameter outside the supported range (e.g. Bessel order above the configured maximum).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Source and target sets overlap or violate a separation requirement.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid user configuration (CLI/JSON).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its stated accuracy.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved = -1.0)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Input samples do not satisfy the PDE they are claimed to solve.
class NotASolutionError : public NumericalError {
 public:
  NotASolutionError(const std::string& what, double residual) : NumericalError(what, residual) {}
};

/// The requested relative error cannot be reached; achieved() holds the best value found.
class UnreachableToleranceError : public NumericalError {
 public:
  UnreachableToleranceError(const std::string& what, double best, int slice = -1)
      : NumericalError(what, best), slice_(slice) {}
  int slice() const noexcept { return slice_; }

 private:
  int slice_;
};

/// A time stepper produced NaN/Inf; step() is the offending step index.
class NonFiniteError : public NumericalError {
 public:
  NonFiniteError(const std::string& what, long step) : NumericalError(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// File system or stream failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vortexlab
