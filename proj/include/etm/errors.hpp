#pragma once

#include <stdexcept>
#include <string>

namespace etm {

// Bad inputs: malformed configs, contract violations, degenerate constants.
// The CLI maps these to exit code 2.
struct ValidationError : std::invalid_argument {
  explicit ValidationError(const std::string& what)
      : std::invalid_argument(what) {}
};

struct DegenerateConstants : ValidationError {
  using ValidationError::ValidationError;
};

struct InsufficientData : ValidationError {
  using ValidationError::ValidationError;
};

struct HistoryGap : ValidationError {
  using ValidationError::ValidationError;
};

// Runtime numerical failures: fixed points that do not converge, NaNs in the
// state. The CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

struct NonConvergence : NumericalError {
  NonConvergence(const std::string& what, double last_residual)
      : NumericalError(what), residual(last_residual) {}
  double residual;
};

}  // namespace etm
