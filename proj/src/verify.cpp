#include "ebb/verify.hpp"

#include "ebb/ellipsoid.hpp"
#include "ebb/local.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ebb::verify {

OracleReport grid_oracle(const Objective& f, const std::vector<QuadraticForm>& constraints,
                         const OracleOptions& opt) {
  const Index n = f.b.size();
  if (n > 6) throw InvalidInput("grid oracle: n > 6 refused (exhaustive scan cost)");
  if (constraints.empty()) throw InvalidInput("grid oracle: need at least one constraint");
  if (opt.resolution < 2) throw InvalidInput("grid oracle: resolution must be >= 2");

  const Ellipsoid e1 = constraints[0].to_ellipsoid();
  // Axis-aligned bounding box of E1: half-width along axis i is sqrt(B_ii).
  Vector lo(n), step(n);
  for (Index i = 0; i < n; ++i) {
    const double h = std::sqrt(std::max(0.0, e1.shape().mat()(i, i)));
    lo[i] = e1.center()[i] - h;
    step[i] = 2.0 * h / (opt.resolution - 1);
  }

  OracleReport rep;
  rep.best_value = std::numeric_limits<double>::infinity();
  rep.grid_value = rep.best_value;

  // Streaming odometer over resolution^n points; keep the best `polish_starts`.
  std::vector<std::pair<double, Vector>> best;  // sorted ascending by value
  const std::size_t keep = static_cast<std::size_t>(std::max(1, opt.polish_starts));
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector x = lo;
  for (;;) {
    ++rep.grid_points;
    bool feasible = true;
    for (const QuadraticForm& g : constraints) {
      if (g.value(x) > g.feas_tol()) {
        feasible = false;
        break;
      }
    }
    if (feasible) {
      ++rep.feasible_points;
      const double fx = f.value(x);
      if (best.size() < keep || fx < best.back().first) {
        auto pos = std::lower_bound(best.begin(), best.end(), fx,
                                    [](const auto& p, double v) { return p.first < v; });
        best.emplace(pos, fx, x);
        if (best.size() > keep) best.pop_back();
      }
    }

    Index axis = 0;
    while (axis < n) {
      if (++idx[static_cast<std::size_t>(axis)] < opt.resolution) {
        x[axis] = lo[axis] + step[axis] * idx[static_cast<std::size_t>(axis)];
        break;
      }
      idx[static_cast<std::size_t>(axis)] = 0;
      x[axis] = lo[axis];
      ++axis;
    }
    if (axis == n) break;
  }

  if (best.empty()) return rep;
  rep.feasible_point_found = true;
  rep.grid_value = best.front().first;
  rep.best_value = best.front().first;
  rep.best_point = best.front().second;
  if (opt.polish_starts < 1) return rep;

  for (const auto& cand : best) {
    try {
      PgOptions po;
      po.tol = 1e-7;
      po.max_iter = opt.polish_iters;
      LocalSolveReport lr = projected_gradient(f, constraints, cand.second, po);
      if (lr.objective < rep.best_value) {
        rep.best_value = lr.objective;
        rep.best_point = lr.solution;
      }
    } catch (const Error&) {
      // grid point remains the candidate
    }
  }
  return rep;
}

}  // namespace ebb::verify
