#pragma once

#include <stdexcept>
#include <string>

namespace pshield {

/// Matrix operands with incompatible shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A block that must be inverted is (numerically) singular.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Input values violate a documented precondition (non-SPD shape, bad bound...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A simulated state left the finite range; `step` is the 1-based sample index.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// An ellipsoid certificate cannot be used (e.g. nonpositive Schur pivot).
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No grid point admits a solution. `infeasibility` is the smallest phase-I
/// shift seen over the grid.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double infeasibility)
      : std::runtime_error(what), infeasibility_(infeasibility) {}

  double infeasibility() const noexcept { return infeasibility_; }

 private:
  double infeasibility_;
};

}  // namespace pshield
