#pragma once

#include "ebb/convex.hpp"
#include "ebb/types.hpp"

#include <vector>

namespace ebb {

// Euclidean projection onto an intersection of SPD ellipsoids, computed by the
// ball-approximation iteration on min ||x - a||^2 with the closed-form dual as
// the subproblem solver. Stateful: consecutive projections reuse the previous
// solution as the feasible anchor and warm-start the dual multipliers.
class Projector {
 public:
  // tol_rel scales the KKT target by the projection's gradient magnitude:
  // tol_kkt = max(1e-7, tol_rel (1 + 2||anchor - a||)).
  Projector(std::vector<QuadraticForm> constraints, Vector feasible_point,
            BallMapParams params = {}, double tol_rel = 1e-6);

  // Returns argmin ||x - a||^2 over the intersection; KKT error of the
  // projection problem is driven to 1e-6 relative to the gradient scale.
  Vector operator()(const Vector& a);

  bool last_converged() const { return last_converged_; }
  double last_kkt() const { return last_kkt_; }
  const Vector& anchor() const { return anchor_; }

 private:
  std::vector<QuadraticForm> constraints_;
  Vector anchor_;
  Vector warm_;
  BallMapParams params_;
  double tol_rel_ = 1e-6;
  bool last_converged_ = true;
  double last_kkt_ = 0.0;
};

// One-shot projection; feasible_point must satisfy every constraint.
Vector project(const std::vector<QuadraticForm>& constraints, const Vector& a,
               const Vector& feasible_point);

enum class LocalTermination { Converged, MaxIter, LineSearchFailure, ProjectionFailure };

struct LocalSolveReport {
  Vector solution;        // best feasible iterate seen (f never above f(x0))
  double objective = 0.0;
  double pg_norm = 0.0;   // ||P(x - grad f(x)) - x|| at the final iterate
  int iterations = 0;
  LocalTermination termination = LocalTermination::MaxIter;
};

struct PgOptions {
  double tol = 1e-4;  // unit-step projected-gradient displacement
  int max_iter = 2000;
  int memory = 8;     // nonmonotone reference window
};

// Nonmonotone projected gradient with a Barzilai-Borwein step (clipped to
// [1e-10, 1e10]) for min f over the ellipsoid intersection; f may be nonconvex.
// Stops when ||P(x_k - g_k) - x_k|| <= tol.
LocalSolveReport projected_gradient(const Objective& f,
                                    const std::vector<QuadraticForm>& constraints,
                                    const Vector& x0, const PgOptions& opt = {});

// Stationarity measure ||P(x - grad f(x)) - x||; zero exactly at constrained
// stationary points. `anchor` must be feasible (x itself usually serves).
double stationarity(const Objective& f, const std::vector<QuadraticForm>& constraints,
                    const Vector& x, const Vector& anchor);

}  // namespace ebb
