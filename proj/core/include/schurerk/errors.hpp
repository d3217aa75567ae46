#pragma once

#include <stdexcept>
#include <string>

namespace schurerk {

/// Shape or argument mismatch detected before any arithmetic happens.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures that arise while computing.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative factorization ran out of its iteration budget.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}

  /// Largest unconverged subdiagonal magnitude at the time of failure.
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A time stepper produced a non-finite state.
class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, double t)
      : NumericalError(what), time_(t) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Step-size controller or step-count budget exhausted.
class StepBudgetError : public NumericalError {
 public:
  StepBudgetError(const std::string& what, double t)
      : NumericalError(what), time_(t) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace schurerk
