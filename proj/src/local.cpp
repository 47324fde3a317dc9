#include "ebb/local.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace ebb {
namespace {

// Active-set Newton polish for min ||x - a||^2 over the intersection. The dual
// ball iteration stalls once two boundaries meet at a ridge; from its warm
// point the equality-constrained Newton system drives the projection KKT
// residual to machine precision in a handful of steps. Any degeneracy (rank
// loss, sign flips that empty the working set, residual stagnation) leaves the
// caller's point untouched.
struct PolishOutcome {
  Vector x;
  Vector mult;  // per original constraint, zero when inactive
  bool ok = false;
};

PolishOutcome polish_projection(const Vector& a, const std::vector<QuadraticForm>& gs,
                                const Vector& x0, const Vector& mult0) {
  const Index n = a.size();
  const std::size_t m = gs.size();
  PolishOutcome out;
  out.x = x0;
  out.mult = mult0;

  std::vector<char> active(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    active[i] = gs[i].value(x0) >= -1e-3 * (1.0 + std::abs(gs[i].c)) ||
                (static_cast<Index>(i) < mult0.size() && mult0[i] > 1e-8);
  }

  for (std::size_t pass = 0; pass < 2 * m + 2; ++pass) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m; ++i)
      if (active[i]) idx.push_back(i);
    const Index k = static_cast<Index>(idx.size());

    Vector x = x0;
    Vector mu = Vector::Zero(k);
    for (Index j = 0; j < k; ++j) {
      const Index src = static_cast<Index>(idx[j]);
      if (src < mult0.size()) mu[j] = std::max(mult0[src], 0.0);
    }

    bool solved = k == 0;
    for (int it = 0; it < 30 && k > 0; ++it) {
      Vector r = 2.0 * (x - a);
      Matrix grads(n, k);
      Vector viol(k);
      for (Index j = 0; j < k; ++j) {
        const QuadraticForm& g = gs[idx[j]];
        grads.col(j) = g.gradient(x);
        viol[j] = g.value(x);
        r += mu[j] * grads.col(j);
      }
      const double r_scale = 1.0 + 2.0 * (x - a).norm();
      bool tight = r.norm() <= 1e-11 * r_scale;
      for (Index j = 0; j < k && tight; ++j) {
        tight = std::abs(viol[j]) <= 1e-11 * (1.0 + std::abs(gs[idx[j]].c));
      }
      if (tight) {
        solved = true;
        break;
      }

      Matrix h = 2.0 * Matrix::Identity(n, n);
      for (Index j = 0; j < k; ++j) h += 2.0 * mu[j] * gs[idx[j]].A.mat();
      try {
        linalg::CholeskyFactor hf{linalg::SymMatrix(h)};
        const Matrix hinv_g = hf.solve(grads);
        const Vector hinv_r = hf.solve(r);
        linalg::CholeskyFactor sf{linalg::SymMatrix(Matrix(grads.transpose() * hinv_g))};
        const Vector dmu = sf.solve(Vector(viol - grads.transpose() * hinv_r));
        const Vector dx = -hinv_r - hinv_g * dmu;
        x += dx;
        mu += dmu;
      } catch (const Error&) {
        return out;  // rank loss: keep the dual-ball answer
      }
    }
    if (!solved) return out;

    // Multiplier sign check: drop the most negative and retry.
    Index worst_mu = -1;
    for (Index j = 0; j < k; ++j) {
      if (mu[j] < -1e-10 && (worst_mu < 0 || mu[j] < mu[worst_mu])) worst_mu = j;
    }
    if (worst_mu >= 0) {
      active[idx[worst_mu]] = 0;
      continue;
    }

    // Feasibility of the constraints left out: add the most violated and retry.
    std::size_t worst_g = m;
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (active[i]) continue;
      const double rel = gs[i].value(x) / (1.0 + std::abs(gs[i].c));
      if (rel > 1e-11 && rel > worst_rel) {
        worst_rel = rel;
        worst_g = i;
      }
    }
    if (worst_g < m) {
      active[worst_g] = 1;
      continue;
    }

    // No worse than the warm point, or the stall was not a stall after all.
    if ((x - a).squaredNorm() > (x0 - a).squaredNorm() + 1e-9 * (1.0 + (x0 - a).squaredNorm())) {
      return out;
    }
    out.x = x;
    out.mult = Vector::Zero(static_cast<Index>(m));
    for (Index j = 0; j < k; ++j) out.mult[static_cast<Index>(idx[j])] = std::max(mu[j], 0.0);
    out.ok = true;
    return out;
  }
  return out;
}

}  // namespace

Projector::Projector(std::vector<QuadraticForm> constraints, Vector feasible_point,
                     BallMapParams params, double tol_rel)
    : constraints_(std::move(constraints)),
      anchor_(std::move(feasible_point)),
      params_(params),
      tol_rel_(tol_rel) {
  if (!(tol_rel_ > 0)) throw InvalidInput("Projector: tol_rel must be positive");
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    if (constraints_[i].value(anchor_) > constraints_[i].feas_tol()) {
      throw InvalidStart("Projector: anchor violates constraint " + std::to_string(i));
    }
  }
}

Vector Projector::operator()(const Vector& a) {
  Objective obj{linalg::SymMatrix::identity(a.size()), -2.0 * a, a.squaredNorm()};

  BaaOptions opt;
  opt.ball = params_;
  // Gradient scale of the projection objective is 2||x - a||; keep the KKT
  // target meaningful across problem scales, never looser than needed.
  opt.tol_kkt = std::max(1e-7, tol_rel_ * (1.0 + 2.0 * (anchor_ - a).norm()));
  opt.max_iter = 2000;
  opt.warm_multipliers = warm_;

  SubproblemFn sub = [&a](const std::vector<Ball>& balls, const Vector& warm) {
    return project_onto_balls(a, balls, warm);
  };
  ConvexSolveReport rep = baa_loop(obj, constraints_, anchor_, opt, sub);

  PolishOutcome polish = polish_projection(a, constraints_, rep.solution, rep.multipliers);
  if (polish.ok) {
    rep.solution = polish.x;
    rep.multipliers = polish.mult;
    rep.kkt = kkt_error(obj, constraints_, rep.solution, rep.multipliers);
    if (rep.kkt <= opt.tol_kkt) rep.termination = ConvexTermination::Converged;
  }

  last_converged_ = rep.termination == ConvexTermination::Converged;
  last_kkt_ = rep.kkt;
  warm_ = (params_.alpha > 0) ? Vector(rep.multipliers / (2.0 * params_.alpha)) : rep.multipliers;
  anchor_ = rep.solution;
  return rep.solution;
}

Vector project(const std::vector<QuadraticForm>& constraints, const Vector& a,
               const Vector& feasible_point) {
  Projector p(constraints, feasible_point);
  return p(a);
}

LocalSolveReport projected_gradient(const Objective& f,
                                    const std::vector<QuadraticForm>& constraints,
                                    const Vector& x0, const PgOptions& opt) {
  if (opt.max_iter < 1 || opt.memory < 1 || opt.tol <= 0) {
    throw InvalidInput("projected_gradient: bad options");
  }

  // Displacements double as the convergence measure, so projections run at a
  // tight relative tolerance; throws InvalidStart when x0 is infeasible.
  Projector proj(constraints, x0, {}, 1e-9);

  LocalSolveReport rep;
  Vector x = x0;
  double fx = f.value(x);
  Vector best_x = x;
  double best_f = fx;

  std::deque<double> memory{fx};
  double alpha = 1.0;
  bool projection_trouble = false;

  for (int k = 1; k <= opt.max_iter; ++k) {
    const Vector g = f.gradient(x);

    // Unit-step displacement doubles as the convergence measure.
    Vector p_unit = proj(x - g);
    if (!proj.last_converged()) projection_trouble = true;
    Vector d_unit = p_unit - x;
    rep.pg_norm = d_unit.norm();
    if (rep.pg_norm <= opt.tol) {
      rep.termination = LocalTermination::Converged;
      break;
    }

    Vector d;
    if (std::abs(alpha - 1.0) < 1e-15) {
      d = d_unit;
    } else {
      Vector p_alpha = proj(x - alpha * g);
      if (!proj.last_converged()) projection_trouble = true;
      d = p_alpha - x;
    }

    double slope = g.dot(d);
    if (slope >= 0.0) {
      d = d_unit;  // BB-scaled direction failed to descend; unit step is safe
      slope = g.dot(d);
      if (slope >= 0.0) {
        rep.termination = projection_trouble ? LocalTermination::ProjectionFailure
                                             : LocalTermination::LineSearchFailure;
        break;
      }
    }

    const double ref = *std::max_element(memory.begin(), memory.end());
    double step = 1.0;
    Vector x_try;
    double f_try = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_try = x + step * d;
      f_try = f.value(x_try);
      if (f_try <= ref + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      rep.termination = projection_trouble ? LocalTermination::ProjectionFailure
                                           : LocalTermination::LineSearchFailure;
      break;
    }

    const Vector s = x_try - x;
    const Vector y = f.gradient(x_try) - g;
    const double sy = s.dot(y);
    alpha = (sy > 1e-30) ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : 1e10;

    x = x_try;
    fx = f_try;
    rep.iterations = k;  // completed descent steps
    memory.push_back(fx);
    if (static_cast<int>(memory.size()) > opt.memory) memory.pop_front();
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }

  // Descent safeguard: report the best feasible iterate, never worse than x0.
  rep.solution = best_x;
  rep.objective = best_f;
  return rep;
}

double stationarity(const Objective& f, const std::vector<QuadraticForm>& constraints,
                    const Vector& x, const Vector& anchor) {
  Projector proj(constraints, anchor, {}, 1e-9);
  return (proj(x - f.gradient(x)) - x).norm();
}

}  // namespace ebb
