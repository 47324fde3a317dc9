#pragma once

#include "ebb/convex.hpp"
#include "ebb/types.hpp"

#include <cstdint>
#include <vector>

namespace ebb::verify {

struct OracleOptions {
  int resolution = 400;   // grid points per axis
  int polish_starts = 10; // projected-gradient polish from the best grid points
  int polish_iters = 2000;
};

struct OracleReport {
  bool feasible_point_found = false;
  double best_value = 0.0;  // after polish; +inf when nothing feasible
  double grid_value = 0.0;  // best raw grid value
  Vector best_point;
  std::uint64_t grid_points = 0;
  std::uint64_t feasible_points = 0;
};

// Brute-force reference optimum: exhaustive scan of the axis-aligned bounding
// box of the first constraint's ellipsoid (which contains the feasible set),
// keeping the best feasible values, then multistart local polish. The grid
// value alone is an upper bound on the true minimum; with polish it lands on
// the optimum for the modest dimensions it accepts (n <= 6 enforced).
OracleReport grid_oracle(const Objective& f, const std::vector<QuadraticForm>& constraints,
                         const OracleOptions& opt = {});

}  // namespace ebb::verify
