#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gsr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value does not hold (range, sign, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The graph is not connected where connectivity is required.
class ConnectivityError : public Error {
 public:
  using Error::Error;
};

/// A linear system that must be solved is singular or numerically so.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (edge lists, station CSV, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A conic solve stopped without reaching the requested tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double primal_residual,
              double dual_residual, int iterations)
      : Error(what + " (iterations=" + std::to_string(iterations) +
              ", primal_residual=" + std::to_string(primal_residual) +
              ", dual_residual=" + std::to_string(dual_residual) + ")"),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual),
        iterations_(iterations) {}

  double primal_residual() const noexcept { return primal_residual_; }
  double dual_residual() const noexcept { return dual_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double primal_residual_;
  double dual_residual_;
  int iterations_;
};

}  // namespace gsr
