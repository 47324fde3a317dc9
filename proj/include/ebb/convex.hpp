#pragma once

#include "ebb/ellipsoid.hpp"
#include "ebb/linalg.hpp"
#include "ebb/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace ebb {

// g(x) = x'Ax + b'x + c, sublevel set {g <= 0}. A SPD for constraint use.
struct QuadraticForm {
  linalg::SymMatrix A;
  Vector b;
  double c = 0.0;

  double value(const Vector& x) const { return x.dot(A.mat() * x) + b.dot(x) + c; }
  Vector gradient(const Vector& x) const { return 2.0 * (A.mat() * x) + b; }
  // {g <= 0} as an ellipsoid: x'Ax - 2(-b/2)'x <= -c.
  Ellipsoid to_ellipsoid() const;
  static QuadraticForm from_ellipsoid(const Ellipsoid& e);
  // Feasibility slack tolerance for this constraint.
  double feas_tol() const { return 1e-9 * (1.0 + std::abs(c)); }
};

// f(x) = x'Ax + b'x + constant.
struct Objective {
  linalg::SymMatrix A = linalg::SymMatrix::identity(1);
  Vector b = Vector::Zero(1);
  double constant = 0.0;

  double value(const Vector& x) const {
    return x.dot(A.mat() * x) + b.dot(x) + constant;
  }
  Vector gradient(const Vector& x) const { return 2.0 * (A.mat() * x) + b; }
};

// Cached spectral data A = Q diag(d) Q' for the separable ball-subproblem dual.
// Eigenvalues within PSD tolerance of zero are clamped to zero; genuinely negative
// spectra are rejected.
class DiagonalizedObjective {
 public:
  explicit DiagonalizedObjective(Objective obj);
  // Trusted constructor reusing known spectral data (rotation q, spectrum d of A).
  DiagonalizedObjective(Objective obj, Matrix q, Vector d);

  const Objective& objective() const { return obj_; }
  const Matrix& rotation() const { return q_; }        // Q
  const Vector& spectrum() const { return d_; }        // ascending, >= 0
  const Vector& rotated_linear() const { return bq_; } // Q' b

 private:
  void clamp_spectrum();
  Objective obj_;
  Matrix q_;
  Vector d_;
  Vector bq_;
};

struct Ball {
  Vector center;
  double radius;
};

struct BallMapParams {
  double alpha = 1.0;
  double beta = 1.0;
};

// B(x) = {z : ||z - (x - alpha grad g(x))|| <= alpha ||grad g(x)|| - beta g(x)}.
// Requires g(x) <= feas_tol; throws ConstraintDegeneracy when both the gradient
// and the value vanish (no ball contains exactly the boundary information).
Ball ball_map(const QuadraticForm& g, const Vector& x, const BallMapParams& p = {});

struct DualAscentResult {
  Vector point;        // primal minimizer, original coordinates
  Vector multipliers;  // ball multipliers lambda >= 0
  bool converged = false;
  int iterations = 0;
  double pg_norm = 0.0;    // final projected-gradient norm of the dual
  double dual_value = 0.0;
};

// min x'A0x + b0'x over the intersection of balls, via the diagonalized dual
// maximized by projected Barzilai-Borwein ascent over lambda >= 0.
DualAscentResult solve_ball_subproblem(const DiagonalizedObjective& obj,
                                       const std::vector<Ball>& balls,
                                       const Vector& warm = Vector());
DualAscentResult solve_ball_subproblem(const Objective& obj,
                                       const std::vector<Ball>& balls,
                                       const Vector& warm = Vector());

// min ||x - a||^2 over the intersection of balls via the closed-form dual;
// the returned point satisfies x = (a + sum lambda_i c_i) / (1 + sum lambda_i).
DualAscentResult project_onto_balls(const Vector& a, const std::vector<Ball>& balls,
                                    const Vector& warm = Vector());

// Largest tau in [0,1] with g_i((1-tau) x + tau y) <= 0 for all i on the whole
// segment [0, tau]; exact quadratic roots, no sampling. Requires g_i(x) <= feas_tol.
double feasible_step(const Vector& x, const Vector& y,
                     const std::vector<QuadraticForm>& constraints);

// ||grad f + sum lambda_i grad g_i||_inf + max_i |lambda_i g_i(x)|.
double kkt_error(const Objective& f, const std::vector<QuadraticForm>& constraints,
                 const Vector& x, const Vector& lambda);

// Convex QCQP: PSD objective, SPD ellipsoidal constraints.
class ConvexQcqp {
 public:
  enum class Validate { Full, Trusted };

  ConvexQcqp(Objective obj, std::vector<QuadraticForm> constraints,
             Validate v = Validate::Full);
  ConvexQcqp(DiagonalizedObjective diag, std::vector<QuadraticForm> constraints,
             Validate v = Validate::Full);

  Index dim() const { return diag_.objective().b.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  const Objective& objective() const { return diag_.objective(); }
  const std::vector<QuadraticForm>& constraints() const { return constraints_; }
  const DiagonalizedObjective& diagonalized() const { return diag_; }

  bool is_feasible(const Vector& x) const;
  double max_violation(const Vector& x) const;  // max_i g_i(x), <= 0 when feasible

 private:
  void validate_constraints() const;
  DiagonalizedObjective diag_;
  std::vector<QuadraticForm> constraints_;
};

enum class ConvexTermination { Converged, StepCollapse, MaxIter, CutoffReached };

struct ConvexIterate {
  double objective;
  double kkt;
  double step;  // tau
};

struct ConvexSolveReport {
  Vector solution;
  Vector multipliers;  // QCQP-scale: 2 alpha * (ball multipliers)
  double objective = 0.0;
  double kkt = 0.0;
  int iterations = 0;
  std::vector<ConvexIterate> trace;  // entry 0 is the starting point
  ConvexTermination termination = ConvexTermination::MaxIter;
  double time_s = 0.0;
};

struct BaaOptions {
  BallMapParams ball;
  double tol_kkt = 1e-4;  // values below 1e-7 are rejected
  int max_iter = 10000;
  std::optional<double> objective_cutoff;  // stop once f(x) < cutoff
  Vector warm_multipliers;                 // ball multipliers, empty -> zeros
};

// Ball-approximation algorithm: iterate ball maps at x_k, solve the ball
// subproblem for y_k, take the largest feasible step toward y_k. The f-trace is
// nonincreasing by construction (backtracking guard on numerical non-descent).
ConvexSolveReport baa_solve(const ConvexQcqp& p, const Vector& x0,
                            const BaaOptions& opt = {});

// Shared driver: same outer loop with a caller-supplied ball-subproblem solver
// (used by the projection operator, which substitutes the closed-form dual).
using SubproblemFn =
    std::function<DualAscentResult(const std::vector<Ball>&, const Vector&)>;
ConvexSolveReport baa_loop(const Objective& f,
                           const std::vector<QuadraticForm>& constraints,
                           const Vector& x0, const BaaOptions& opt,
                           const SubproblemFn& subproblem);

}  // namespace ebb
