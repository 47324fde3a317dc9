#include "ebb/phase1.hpp"

#include "ebb/local.hpp"

#include <cmath>
#include <limits>

namespace ebb::phase1 {
namespace {

double strict_margin(const QuadraticForm& g) { return 1e-8 * (1.0 + std::abs(g.c)); }

struct StageOutcome {
  enum class Kind { Deep, Infeasible, Ambiguous } kind;
  Vector point;
  int iterations = 0;
};

// Minimize g_target over `region`, early-exiting once strictly below -deep
// (repair rounds pass full_solve to run to optimality instead). Infeasibility
// only from a converged solve whose minimum clears +infeas_margin.
StageOutcome minimize_constraint(const QuadraticForm& g_target,
                                 const std::vector<QuadraticForm>& region,
                                 const Vector& start, double deep,
                                 double infeas_margin, bool full_solve = false) {
  ConvexQcqp stage(Objective{g_target.A, g_target.b, g_target.c}, region,
                   ConvexQcqp::Validate::Trusted);
  BaaOptions opt;
  opt.tol_kkt = std::max(1e-7, 1e-6 * (1.0 + std::abs(g_target.c)));
  opt.max_iter = 5000;
  if (!full_solve) {
    // The pinned early exit (value < -1e-10 (1+|c|)) can stop short of the strict
    // interior margin; cutting at the deeper of the two thresholds bridges that gap
    // without running any stage to full optimality.
    opt.objective_cutoff = -std::max(1e-10 * (1.0 + std::abs(g_target.c)), 2.0 * deep);
  }

  ConvexSolveReport rep = baa_solve(stage, start, opt);

  StageOutcome out;
  out.iterations = rep.iterations;
  out.point = rep.solution;
  if (rep.objective <= -deep) {
    out.kind = StageOutcome::Kind::Deep;
  } else if (rep.termination == ConvexTermination::Converged &&
             rep.objective > infeas_margin) {
    out.kind = StageOutcome::Kind::Infeasible;
  } else {
    out.kind = StageOutcome::Kind::Ambiguous;
  }
  return out;
}

}  // namespace

Phase1Result find_feasible(const std::vector<QuadraticForm>& constraints) {
  const std::size_t m = constraints.size();
  if (m == 0) throw InvalidInput("find_feasible: at least one constraint required");
  const Index n = constraints[0].b.size();

  for (std::size_t i = 0; i < m; ++i) {
    const QuadraticForm& g = constraints[i];
    if (g.A.size() != n || g.b.size() != n) {
      throw InvalidInput("find_feasible: constraint " + std::to_string(i) + " dimension");
    }
    linalg::EigenPair low =
        linalg::extreme_eigenpair(g.A, linalg::ExtremeSide::Smallest, 1e-8);
    if (!(low.value > 1e-12 * (1.0 + g.A.frobenius_norm()))) {
      throw InvalidInput("find_feasible: constraint " + std::to_string(i) + " is not SPD");
    }
  }

  Phase1Result res;

  // Stage 1: the unconstrained minimum of g_1 sits at the first ellipsoid's center.
  Vector x = linalg::solve_spd(constraints[0].A, -0.5 * constraints[0].b);
  const double g1_min = constraints[0].value(x);
  const double s1 = strict_margin(constraints[0]);
  if (g1_min > s1) {
    res.status = FeasibilityStatus::Infeasible;
    res.stage = 0;
    return res;
  }
  if (g1_min > -s1) {
    res.status = FeasibilityStatus::Ambiguous;
    res.stage = 0;
    return res;
  }

  std::vector<QuadraticForm> region{constraints[0]};
  for (std::size_t k = 1; k < m; ++k) {
    const QuadraticForm& gk = constraints[k];
    const double sk = strict_margin(gk);
    if (gk.value(x) > -sk) {
      StageOutcome stage = minimize_constraint(gk, region, x, sk, sk);
      res.inner_iterations += stage.iterations;
      if (stage.kind == StageOutcome::Kind::Infeasible) {
        res.status = FeasibilityStatus::Infeasible;
        res.stage = k;
        return res;
      }
      if (stage.kind == StageOutcome::Kind::Ambiguous) {
        res.status = FeasibilityStatus::Ambiguous;
        res.stage = k;
        return res;
      }
      x = stage.point;
    }
    region.push_back(gk);
  }

  // The stage minimizer for g_k may ride the boundary of an earlier constraint.
  // Repair rounds: fully re-minimize the shallowest constraint over the others,
  // then step to the midpoint of the old and repaired points. Convexity keeps
  // every constraint nonpositive at the midpoint while the repaired one turns
  // strictly deep, so alternating boundary rides cannot cycle.
  for (std::size_t round = 0; round <= m; ++round) {
    std::size_t worst = m;
    double worst_rel = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double rel = constraints[i].value(x) / (1.0 + std::abs(constraints[i].c));
      if (rel > -1e-8 && rel > worst_rel) {
        worst_rel = rel;
        worst = i;
      }
    }
    if (worst == m) {
      res.status = FeasibilityStatus::Feasible;
      res.point = x;
      return res;
    }
    std::vector<QuadraticForm> others;
    for (std::size_t i = 0; i < m; ++i)
      if (i != worst) others.push_back(constraints[i]);
    if (others.empty()) break;
    const double sw = strict_margin(constraints[worst]);
    StageOutcome repair = minimize_constraint(constraints[worst], others, x, sw, sw,
                                              /*full_solve=*/true);
    res.inner_iterations += repair.iterations;
    if (repair.kind == StageOutcome::Kind::Infeasible) {
      res.status = FeasibilityStatus::Infeasible;
      res.stage = worst;
      return res;
    }
    if (repair.kind != StageOutcome::Kind::Deep) break;
    x = 0.5 * (x + repair.point);
  }

  res.status = FeasibilityStatus::Ambiguous;
  res.stage = m;
  return res;
}

Phase1Result find_feasible_in(const Ellipsoid& e,
                              const std::vector<QuadraticForm>& constraints,
                              const Vector& x0) {
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (constraints[i].value(x0) > constraints[i].feas_tol()) {
      throw InvalidStart("find_feasible_in: x0 violates constraint " + std::to_string(i));
    }
  }

  Phase1Result res;
  const double tol_e = e.membership_tol();

  if (e.contains(x0).inside) {
    res.status = FeasibilityStatus::Feasible;
    res.point = x0;
    return res;
  }

  // Cheap pass: project the ellipsoid center onto the constraint set; landing
  // inside E certifies feasibility without diagonalizing E's quadratic.
  try {
    Vector p = project(constraints, e.center(), x0);
    if (e.contains(p).inside) {
      res.status = FeasibilityStatus::Feasible;
      res.point = p;
      return res;
    }
  } catch (const Error&) {
    // certificate path below decides
  }

  const QuadraticForm ge = QuadraticForm::from_ellipsoid(e);  // value = E slack
  ConvexQcqp stage(Objective{ge.A, ge.b, ge.c}, constraints,
                   ConvexQcqp::Validate::Trusted);
  BaaOptions opt;
  opt.tol_kkt = std::max(1e-7, 1e-6 * (1.0 + std::abs(e.quad_level())));
  opt.max_iter = 5000;
  opt.objective_cutoff = -1e-10 * (1.0 + std::abs(e.quad_level()));

  ConvexSolveReport rep = baa_solve(stage, x0, opt);
  res.inner_iterations = rep.iterations;

  if (rep.objective <= tol_e) {
    res.status = FeasibilityStatus::Feasible;
    res.point = rep.solution;
  } else if (rep.termination == ConvexTermination::Converged &&
             rep.objective > 1e-8 * (1.0 + std::abs(e.quad_level()))) {
    res.status = FeasibilityStatus::Infeasible;
  } else {
    res.status = FeasibilityStatus::Ambiguous;
  }
  return res;
}

}  // namespace ebb::phase1
