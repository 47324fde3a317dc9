#pragma once

#include "ebb/convex.hpp"
#include "ebb/ellipsoid.hpp"
#include "ebb/linalg.hpp"
#include "ebb/phase1.hpp"
#include "ebb/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ebb {

enum class ObjectiveKind { Convex, Psd, Indefinite };

// General QCQP: possibly indefinite objective, SPD ellipsoidal constraints
// (at least one). Caches the objective spectrum for classification and for the
// shifted bound objectives.
class Qcqp {
 public:
  Qcqp(Objective obj, std::vector<QuadraticForm> constraints);

  Index dim() const { return objective_.b.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  const Objective& objective() const { return objective_; }
  const std::vector<QuadraticForm>& constraints() const { return constraints_; }
  const linalg::EigenDecomposition& spectrum() const { return spectrum_; }

  double lambda_min() const { return spectrum_.eigenvalues[0]; }
  ObjectiveKind kind() const;             // tolerance 1e-10 (1 + ||A0||_F)
  int negative_eigenvalues() const;

  bool is_feasible(const Vector& x) const;

 private:
  Objective objective_;
  std::vector<QuadraticForm> constraints_;
  linalg::EigenDecomposition spectrum_;
};

// f = (f + sigma ||x||^2) - sigma ||x||^2 with sigma = max(0, 0.1 - lambda_min):
// the shifted part is strongly convex (modulus >= 0.1) whenever a shift is
// needed, and safely convex objectives are left untouched.
struct DcDecomposition {
  double sigma;
};
double dc_sigma_value(double lambda_min);
DcDecomposition dc_sigma(const Qcqp& p);

// First constraint's sublevel set; it contains the feasible region.
Ellipsoid initial_ellipsoid(const Qcqp& p);

// Unit direction of the semi-major axis: bisecting across it maximizes the
// guaranteed diameter shrink.
Vector branch_direction(const Ellipsoid& e);

struct BoundResult {
  phase1::FeasibilityStatus feasibility = phase1::FeasibilityStatus::Ambiguous;
  double value = 0.0;        // M_L = f_L(y); +inf when E ∩ Ω certified empty
  Vector minimizer;          // y, engaged when feasible
  Vector multipliers;        // bound-solve multipliers (constraints + E)
  double objective_at_y = 0.0;  // f(y)
  double dc_gap = 0.0;       // sigma * delta(E)^2 / 4
};

// Lower bound over E ∩ Ω: find a feasible start (phase one), minimize
// f_L = x'(A0 + sigma I)x + b0'x + sigma l*_E(x) by the ball-approximation
// algorithm. M_L <= f on E ∩ Ω pointwise; f(y) - M_L <= sigma delta^2/4.
BoundResult lower_bound(const Ellipsoid& e, const Qcqp& p, const DcDecomposition& dc,
                        const linalg::SymMatrix& shifted_a, const Vector& warm_point,
                        const Vector& warm_multipliers, const BallMapParams& ball = {});

enum class GlobalTermination { GapClosed, NodeBudget, Degenerate, Infeasible, AmbiguousStart };

struct NodeDiagnostic {
  std::uint64_t id = 0;
  std::uint64_t parent = 0;
  int depth = 0;
  double lower_bound = 0.0;     // after monotonization against the parent
  double objective_at_y = 0.0;  // f(y); NaN when no feasible point was produced
  double dc_gap = 0.0;
  char feasibility = 'F';       // 'F' feasible, 'I' infeasible, 'A' ambiguous
};

struct GlobalSolveReport {
  Vector incumbent;     // empty when no feasible point exists
  double value = 0.0;   // f(incumbent); +inf when infeasible
  double first_lower = 0.0;  // lb1: root M_L
  double first_upper = 0.0;  // ub1: incumbent after the first local polish
  std::vector<double> lb_trace, ub_trace;  // entry per iteration, entry 0 = root
  int bisections = 0;   // "it"
  std::uint64_t nodes_explored = 0;
  std::uint64_t nodes_pruned = 0;
  GlobalTermination termination = GlobalTermination::GapClosed;
  double time_s = 0.0;
  std::vector<NodeDiagnostic> node_log;  // filled when collect_node_log
};

struct EblOptions {
  double eps_abs = 1e-5;
  double eps_rel = 1e-2;
  std::optional<std::uint64_t> node_budget;  // bisection budget; default 500 n
  int local_budget = 500;  // projected-gradient iterations per polish
  bool collect_node_log = false;
  bool parallel_children = false;  // evaluate the two children concurrently
  BallMapParams ball;
};

// Ellipsoidal branch and bound: best-first on M_L, major-axis bisection,
// UB from local polish of bound minimizers. Stops when
// UB - LB <= max(eps_abs, eps_rel |LB|).
GlobalSolveReport ebl_solve(const Qcqp& p, const EblOptions& opt = {});

}  // namespace ebb
