#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>

namespace ebb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Base class for all hard failures. Expected/negotiable outcomes (infeasibility,
// step collapse, ambiguous feasibility, ...) are statuses on results, not exceptions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition violation: bad dimensions, non-finite data, out-of-contract arguments.
struct InvalidInput : Error {
  using Error::Error;
};

// Cholesky pivot fell below the positive-definiteness threshold.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

// Iterative eigen computation ran out of budget; carries the best iterate found.
struct ConvergenceFailure : Error {
  ConvergenceFailure(const std::string& what, double value, Vector vector)
      : Error(what), best_value(value), best_vector(std::move(vector)) {}
  double best_value;
  Vector best_vector;
};

// Ball map undefined: vanishing constraint gradient on the constraint boundary.
struct ConstraintDegeneracy : Error {
  using Error::Error;
};

// Iterative solve started from a point violating a constraint beyond tolerance.
struct InvalidStart : Error {
  using Error::Error;
};

// Quadratic-form level set has empty interior (rho + c'Ac <= 0).
struct EmptyEllipsoid : InvalidInput {
  using InvalidInput::InvalidInput;
};

}  // namespace ebb
