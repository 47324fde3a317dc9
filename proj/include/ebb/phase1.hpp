#pragma once

#include "ebb/convex.hpp"
#include "ebb/ellipsoid.hpp"
#include "ebb/types.hpp"

#include <vector>

namespace ebb::phase1 {

enum class FeasibilityStatus {
  Feasible,    // strictly interior point found (g_i(x) <= -1e-8 (1+|c_i|) for all i)
  Infeasible,  // some stage's minimum certified above its feasibility level
  Ambiguous,   // contact only at tolerance scale; no strict interior certified
};

struct Phase1Result {
  FeasibilityStatus status = FeasibilityStatus::Ambiguous;
  Vector point;               // engaged when Feasible
  std::size_t stage = 0;      // constraint index that decided Infeasible/Ambiguous
  int inner_iterations = 0;   // total BAA iterations across stages
};

// Inductive interior-point search over {g_1 <= 0} ∩ ... ∩ {g_m <= 0}: start at
// the first ellipsoid's center, then minimize each g_k over the previous
// intersection, exiting early once strictly feasible. Infeasibility is declared
// only from a converged stage whose minimum exceeds the level by margin.
Phase1Result find_feasible(const std::vector<QuadraticForm>& constraints);

// Feasibility of E ∩ {constraints}: returns a point of the intersection (not
// necessarily strictly interior) by minimizing E's quadratic over the
// constraint set from x0, cutting off at rho - 1e-10 (1+|rho|). x0 must be
// feasible for `constraints`.
Phase1Result find_feasible_in(const Ellipsoid& e,
                              const std::vector<QuadraticForm>& constraints,
                              const Vector& x0);

}  // namespace ebb::phase1
