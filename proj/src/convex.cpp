#include "ebb/convex.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace ebb {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// --- projected Barzilai-Borwein ascent over lambda >= 0 ----------------------
//
// Maximizes a concave dual q(lambda). The evaluator fills value/gradient and may
// flag the point as outside the dual domain (value -inf), which the nonmonotone
// line search then rejects.

struct DualEval {
  double value = -kInf;
  Vector gradient;
  bool finite = false;
};

struct AscentOutcome {
  Vector lambda;
  bool converged = false;
  int iterations = 0;
  double pg_norm = kInf;
  double value = -kInf;
};

// Scaled dual optimality: max over i of ascent-feasibility (grad_i > 0 means the
// dual still increases along lambda_i) and complementarity |lambda_i grad_i|,
// each relative to the ball's own magnitude so one large ball cannot mask
// violations of a small one. The unit-step projected gradient is useless here:
// it saturates at lambda_i when the gradient is very negative, hiding
// multipliers that should collapse to zero.
double dual_residual(const Vector& lam, const Vector& grad, const Vector& scale) {
  double r = 0.0;
  for (Index i = 0; i < lam.size(); ++i) {
    const double pos = std::max(grad[i], 0.0);
    const double comp = lam[i] * std::abs(grad[i]) / (1.0 + lam[i]);
    r = std::max(r, std::max(pos, comp) / scale[i]);
  }
  return r;
}

template <typename Eval>
AscentOutcome ascend(const Eval& eval, Vector lam, const Vector& scale, double tol,
                     int max_iter) {
  const Index m = lam.size();
  auto residual = [&scale](const Vector& l, const Vector& grad) {
    return dual_residual(l, grad, scale);
  };

  AscentOutcome out;
  if (m == 0) {
    DualEval e = eval(lam);
    out.lambda = lam;
    out.converged = e.finite;
    out.pg_norm = 0.0;
    out.value = e.value;
    return out;
  }

  DualEval cur = eval(lam);
  if (!cur.finite) {
    // A strict-interior restart keeps the inner minimizer defined when the
    // objective spectrum has zero eigenvalues; nudge until the dual is defined.
    for (Index i = 0; i < m; ++i) lam[i] = std::max(lam[i], 1e-8);
    cur = eval(lam);
    for (int tries = 0; tries < 60 && !cur.finite; ++tries) {
      lam.array() += std::pow(2.0, tries) * 1e-6;
      cur = eval(lam);
    }
    if (!cur.finite) {
      out.lambda = lam;
      return out;
    }
  }

  std::deque<double> memory{cur.value};
  const int memory_len = 10;
  double alpha = 1.0 / (1.0 + cur.gradient.lpNorm<Eigen::Infinity>());
  Vector best_lam = lam;
  double best_val = cur.value;

  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;

    out.pg_norm = residual(lam, cur.gradient);
    if (out.pg_norm <= tol) {
      out.lambda = lam;
      out.converged = true;
      out.value = cur.value;
      return out;
    }

    Vector d = (lam + alpha * cur.gradient).cwiseMax(0.0) - lam;
    double slope = cur.gradient.dot(d);  // >= ||d||^2/alpha > 0
    if (slope <= 0.0 || d.lpNorm<Eigen::Infinity>() == 0.0) {
      // Numerically stationary along the feasible directions.
      out.lambda = lam;
      out.converged = out.pg_norm <= tol;
      out.value = cur.value;
      return out;
    }

    // Nonmonotone reference for a maximization: the smallest recent value.
    const double worst = *std::min_element(memory.begin(), memory.end());

    double step = 1.0;
    Vector lam_try;
    DualEval next;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      lam_try = lam + step * d;
      next = eval(lam_try);
      if (next.finite && next.value >= worst + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.lambda = lam;
      out.value = cur.value;
      return out;
    }

    Vector s = lam_try - lam;
    Vector yv = cur.gradient - next.gradient;  // gradient of -q increases along s
    double sy = s.dot(yv);
    double ss = s.squaredNorm();
    alpha = (sy > 1e-30) ? std::min(1e12, std::max(1e-12, ss / sy))
                         : std::min(1e12, 1.0 / (1e-30 + next.gradient.lpNorm<Eigen::Infinity>()));

    lam = lam_try;
    cur = next;
    memory.push_back(cur.value);
    if (static_cast<int>(memory.size()) > memory_len) memory.pop_front();
    if (cur.value > best_val) {
      best_val = cur.value;
      best_lam = lam;
    }
  }

  out.lambda = best_lam;
  out.value = best_val;
  out.pg_norm = residual(best_lam, eval(best_lam).gradient);
  out.converged = out.pg_norm <= tol;
  return out;
}

// Magnitude of the dual gradient component ||x - c_i||^2 - r_i^2 near a solution;
// the floor keeps tiny balls from demanding sub-roundoff stationarity.
Vector ball_scales(const std::vector<Ball>& balls, double extra) {
  Vector s(static_cast<Index>(balls.size()));
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const Ball& b = balls[i];
    s[static_cast<Index>(i)] =
        1.0 + b.radius * b.radius + b.center.squaredNorm() + extra;
  }
  return s;
}

// Active-set Newton polish for the dual. The BB ascent localizes the active set
// and meets its stopping tolerance, but a huge ball needs its multiplier
// resolved to roundoff or the primal point pokes outside by more than the next
// BAA line-search step can absorb. The dual gradient phi is smooth in lambda, so
// a few Newton passes on the active system phi_A(lambda) = 0 finish the job.
template <typename Eval, typename JacobianFn>
void newton_refine(const Eval& eval, const JacobianFn& jac, const Vector& scale,
                   double tol, AscentOutcome& best) {
  Vector lam = best.lambda.cwiseMax(0.0);
  DualEval e = eval(lam);
  if (!e.finite) return;
  double best_res = dual_residual(lam, e.gradient, scale);
  Vector best_lam = lam;
  double best_val = e.value;
  for (int pass = 0; pass < 12 && best_res > 0.0; ++pass) {
    std::vector<Index> act;
    for (Index i = 0; i < lam.size(); ++i) {
      if (lam[i] > 0.0 || e.gradient[i] > 0.0) act.push_back(i);
    }
    if (act.empty()) break;
    Matrix neg_j = -jac(lam, act);  // minus the Jacobian of phi_A: PSD
    neg_j.diagonal().array() += 1e-14 * (1.0 + neg_j.diagonal().maxCoeff());
    Vector phi(static_cast<Index>(act.size()));
    for (std::size_t a = 0; a < act.size(); ++a) {
      phi[static_cast<Index>(a)] = e.gradient[act[a]];
    }
    Eigen::LDLT<Matrix> fact(neg_j);
    if (fact.info() != Eigen::Success) break;
    const Vector delta = fact.solve(phi);
    if (!delta.allFinite()) break;
    for (std::size_t a = 0; a < act.size(); ++a) {
      lam[act[a]] = std::max(0.0, lam[act[a]] + delta[static_cast<Index>(a)]);
    }
    e = eval(lam);
    if (!e.finite) break;
    const double res = dual_residual(lam, e.gradient, scale);
    if (res < best_res) {
      best_res = res;
      best_lam = lam;
      best_val = e.value;
    } else if (res > 10.0 * best_res) {
      break;  // wandered off; keep the best point seen
    }
  }
  best.lambda = best_lam;
  best.value = best_val;
  best.pg_norm = best_res;
  best.converged = best.converged || best_res <= tol;
}

// Largest t in [0,1] with x + t(z-x) inside every ball; x must be a member.
// The dual solver leaves z violating a ball by a hair, which is enough to break
// the descent-step lower bound tau >= 1/(2 alpha lambda_max), so the iterate is
// pulled back inside exactly before the line search.
Vector clip_into_balls(const Vector& x, const Vector& z, const std::vector<Ball>& balls) {
  const Vector d = z - x;
  if (d.lpNorm<Eigen::Infinity>() == 0.0) return z;
  double t = 1.0;
  for (const Ball& b : balls) {
    const Vector w = x - b.center;
    const double qa = d.squaredNorm();
    const double qb = 2.0 * w.dot(d);
    const double qc = std::min(w.squaredNorm() - b.radius * b.radius, 0.0);
    const double disc = std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * qc));
    const double root =
        (qb <= 0.0) ? (disc - qb) / (2.0 * qa) : (-2.0 * qc) / (qb + disc);
    t = std::min(t, std::max(0.0, root));
  }
  return x + t * d;
}

}  // namespace

// --- quadratic forms ----------------------------------------------------------

Ellipsoid QuadraticForm::to_ellipsoid() const {
  return Ellipsoid::from_quadratic(A, -0.5 * b, -c);
}

QuadraticForm QuadraticForm::from_ellipsoid(const Ellipsoid& e) {
  return {e.quad_matrix(), -2.0 * e.quad_vector(), -e.quad_level()};
}

// --- diagonalized objective ----------------------------------------------------

DiagonalizedObjective::DiagonalizedObjective(Objective obj) : obj_(std::move(obj)) {
  linalg::EigenDecomposition eig = linalg::sym_eig(obj_.A);
  q_ = std::move(eig.eigenvectors);
  d_ = std::move(eig.eigenvalues);
  clamp_spectrum();
  bq_ = q_.transpose() * obj_.b;
}

DiagonalizedObjective::DiagonalizedObjective(Objective obj, Matrix q, Vector d)
    : obj_(std::move(obj)), q_(std::move(q)), d_(std::move(d)) {
  if (q_.rows() != obj_.A.size() || d_.size() != obj_.A.size()) {
    throw InvalidInput("DiagonalizedObjective: spectral data dimension mismatch");
  }
  clamp_spectrum();
  bq_ = q_.transpose() * obj_.b;
}

void DiagonalizedObjective::clamp_spectrum() {
  const double tol = 1e-10 * (1.0 + obj_.A.frobenius_norm());
  for (Index j = 0; j < d_.size(); ++j) {
    if (d_[j] < -tol) {
      throw NotPositiveDefinite(
          "DiagonalizedObjective: objective is not positive semidefinite");
    }
    if (d_[j] < 0.0) d_[j] = 0.0;
  }
}

// --- ball map -------------------------------------------------------------------

Ball ball_map(const QuadraticForm& g, const Vector& x, const BallMapParams& p) {
  if (p.alpha <= 0 || p.beta <= 0) throw InvalidInput("ball_map: alpha, beta must be > 0");
  const double gx = g.value(x);
  if (gx > g.feas_tol()) {
    throw InvalidStart("ball_map: point violates the constraint");
  }
  const Vector grad = g.gradient(x);
  const double gn = grad.norm();
  const double value = std::min(gx, 0.0);  // clamp feasibility noise
  if (gn <= 1e-14 * (1.0 + g.A.frobenius_norm() * x.norm() + g.b.norm()) &&
      value >= -g.feas_tol()) {
    throw ConstraintDegeneracy("ball_map: vanishing gradient on the boundary");
  }
  return {x - p.alpha * grad, p.alpha * gn - p.beta * value};
}

// --- ball subproblem (diagonalized dual) ---------------------------------------

DualAscentResult solve_ball_subproblem(const DiagonalizedObjective& obj,
                                       const std::vector<Ball>& balls,
                                       const Vector& warm) {
  const Index n = obj.spectrum().size();
  const Index m = static_cast<Index>(balls.size());
  for (const Ball& b : balls) {
    if (b.center.size() != n) throw InvalidInput("solve_ball_subproblem: ball dimension");
    if (!(b.radius >= 0)) throw InvalidInput("solve_ball_subproblem: negative radius");
  }

  // Rotated data: x = Qy, centers Q'c_i.
  Matrix centers(n, m);
  Vector rsq(m), csq(m);
  for (Index i = 0; i < m; ++i) {
    centers.col(i) = obj.rotation().transpose() * balls[i].center;
    rsq[i] = balls[i].radius * balls[i].radius;
    csq[i] = centers.col(i).squaredNorm();
  }
  const Vector& d = obj.spectrum();
  const Vector& bq = obj.rotated_linear();
  const double denom_tiny = 1e-14 * (1.0 + d.maxCoeff());
  const double lin_tiny = 1e-14 * (1.0 + bq.lpNorm<Eigen::Infinity>());

  Vector y = Vector::Zero(n);
  auto eval = [&](const Vector& lam) -> DualEval {
    DualEval e;
    const double total = lam.sum();
    Vector lin = bq - 2.0 * (centers * lam);
    double value = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double denom = d[j] + total;
      if (denom <= denom_tiny) {
        if (std::abs(lin[j]) <= lin_tiny) {
          y[j] = 0.0;
          continue;
        }
        return e;  // unbounded below in coordinate j: outside the dual domain
      }
      y[j] = -lin[j] / (2.0 * denom);
      value -= lin[j] * lin[j] / (4.0 * denom);
    }
    for (Index i = 0; i < m; ++i) value += lam[i] * (csq[i] - rsq[i]);
    e.value = value;
    e.gradient.resize(m);
    for (Index i = 0; i < m; ++i) {
      e.gradient[i] = (y - centers.col(i)).squaredNorm() - rsq[i];
    }
    e.finite = true;
    return e;
  };

  Vector lam0 = (warm.size() == m) ? warm : Vector::Zero(m);
  const Vector scales = ball_scales(balls, 0.0);
  AscentOutcome best = ascend(eval, std::move(lam0), scales, 1e-10, 5000);
  // d phi_a / d lambda_b = -2 sum_j (y_j - c_aj)(y_j - c_bj) / (d_j + T); y is
  // kept current by eval.
  auto jac = [&](const Vector& lam, const std::vector<Index>& act) {
    const double total = lam.sum();
    const Index k = static_cast<Index>(act.size());
    Matrix j = Matrix::Zero(k, k);
    for (Index col = 0; col < n; ++col) {
      const double denom = d[col] + total;
      if (denom <= denom_tiny) continue;
      for (Index a = 0; a < k; ++a) {
        const double ya = y[col] - centers(col, act[static_cast<std::size_t>(a)]);
        for (Index b = a; b < k; ++b) {
          const double yb = y[col] - centers(col, act[static_cast<std::size_t>(b)]);
          j(a, b) -= 2.0 * ya * yb / denom;
        }
      }
    }
    j.triangularView<Eigen::StrictlyLower>() = j.transpose();
    return j;
  };
  newton_refine(eval, jac, scales, 1e-10, best);

  DualAscentResult out;
  out.multipliers = best.lambda;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.pg_norm = best.pg_norm;
  out.dual_value = best.value + obj.objective().constant;
  eval(best.lambda);  // refresh y at the returned multipliers
  out.point = obj.rotation() * y;
  return out;
}

DualAscentResult solve_ball_subproblem(const Objective& obj,
                                       const std::vector<Ball>& balls,
                                       const Vector& warm) {
  return solve_ball_subproblem(DiagonalizedObjective(obj), balls, warm);
}

// --- projection onto ball intersections (closed-form dual) ----------------------

DualAscentResult project_onto_balls(const Vector& a, const std::vector<Ball>& balls,
                                    const Vector& warm) {
  const Index n = a.size();
  const Index m = static_cast<Index>(balls.size());
  Matrix centers(n, m);
  Vector rsq(m), csq(m);
  for (Index i = 0; i < m; ++i) {
    if (balls[i].center.size() != n) throw InvalidInput("project_onto_balls: dimension");
    if (!(balls[i].radius >= 0)) throw InvalidInput("project_onto_balls: negative radius");
    centers.col(i) = balls[i].center;
    rsq[i] = balls[i].radius * balls[i].radius;
    csq[i] = centers.col(i).squaredNorm();
  }

  Vector x = Vector::Zero(n);
  auto eval = [&](const Vector& lam) -> DualEval {
    DualEval e;
    const double total = lam.sum();
    const Vector w = a + centers * lam;
    x = w / (1.0 + total);
    // min over x of ||x-a||^2 + sum lam_i (||x-c_i||^2 - r_i^2), at the closed form;
    // the ||a||^2 term keeps the value comparable with the primal objective.
    double value = a.squaredNorm() - w.squaredNorm() / (1.0 + total);
    for (Index i = 0; i < m; ++i) value += lam[i] * (csq[i] - rsq[i]);
    e.value = value;
    e.gradient.resize(m);
    for (Index i = 0; i < m; ++i) {
      e.gradient[i] = (x - centers.col(i)).squaredNorm() - rsq[i];
    }
    e.finite = true;
    return e;
  };

  Vector lam0 = (warm.size() == m) ? warm : Vector::Zero(m);
  const Vector scales = ball_scales(balls, a.squaredNorm());
  AscentOutcome best = ascend(eval, std::move(lam0), scales, 1e-10, 5000);
  // Same Newton system with unit spectrum: d phi_a / d lambda_b =
  // -2 (x - c_a).(x - c_b) / (1 + T); x is kept current by eval.
  auto jac = [&](const Vector& lam, const std::vector<Index>& act) {
    const double total = lam.sum();
    const Index k = static_cast<Index>(act.size());
    Matrix j(k, k);
    for (Index ai = 0; ai < k; ++ai) {
      const Vector xa = x - centers.col(act[static_cast<std::size_t>(ai)]);
      for (Index bi = ai; bi < k; ++bi) {
        const Vector xb = x - centers.col(act[static_cast<std::size_t>(bi)]);
        j(ai, bi) = -2.0 * xa.dot(xb) / (1.0 + total);
      }
    }
    j.triangularView<Eigen::StrictlyLower>() = j.transpose();
    return j;
  };
  newton_refine(eval, jac, scales, 1e-10, best);

  DualAscentResult out;
  out.multipliers = best.lambda;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.pg_norm = best.pg_norm;
  out.dual_value = best.value;
  eval(best.lambda);  // refresh x
  out.point = x;
  return out;
}

// --- exact feasible step ---------------------------------------------------------

double feasible_step(const Vector& x, const Vector& y,
                     const std::vector<QuadraticForm>& constraints) {
  const Vector u = y - x;
  if (u.lpNorm<Eigen::Infinity>() == 0.0) return 1.0;

  double tau = 1.0;
  for (const QuadraticForm& g : constraints) {
    const double gx = g.value(x);
    if (gx > g.feas_tol()) throw InvalidStart("feasible_step: infeasible base point");

    const double qa = u.dot(g.A.mat() * u);           // >= 0, A SPD
    const double qb = g.gradient(x).dot(u);
    const double qc = std::min(gx, 0.0);              // clamp feasibility noise

    double ti;
    if (qa <= 1e-300) {
      ti = (qb <= 0.0) ? 1.0 : std::min(1.0, -qc / qb);
    } else {
      const double disc = std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * qc));
      // Larger root of qa t^2 + qb t + qc = 0 in its cancellation-free form.
      const double root = (qb <= 0.0) ? (disc - qb) / (2.0 * qa)
                                      : (-2.0 * qc) / (qb + disc);
      ti = std::min(1.0, std::max(0.0, root));
    }
    tau = std::min(tau, ti);
  }
  return tau;
}

// --- KKT error -------------------------------------------------------------------

double kkt_error(const Objective& f, const std::vector<QuadraticForm>& constraints,
                 const Vector& x, const Vector& lambda) {
  if (static_cast<std::size_t>(lambda.size()) != constraints.size()) {
    throw InvalidInput("kkt_error: multiplier count mismatch");
  }
  Vector r = f.gradient(x);
  double comp = 0.0;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    double li = lambda[static_cast<Index>(i)];
    if (li < -1e-12 * (1.0 + lambda.cwiseAbs().maxCoeff())) {
      throw InvalidInput("kkt_error: negative multiplier");
    }
    li = std::max(li, 0.0);
    r += li * constraints[i].gradient(x);
    comp = std::max(comp, std::abs(li * constraints[i].value(x)));
  }
  return r.lpNorm<Eigen::Infinity>() + comp;
}

// --- convex problem --------------------------------------------------------------

ConvexQcqp::ConvexQcqp(Objective obj, std::vector<QuadraticForm> constraints, Validate v)
    : diag_(std::move(obj)), constraints_(std::move(constraints)) {
  if (v == Validate::Full) validate_constraints();
}

ConvexQcqp::ConvexQcqp(DiagonalizedObjective diag, std::vector<QuadraticForm> constraints,
                       Validate v)
    : diag_(std::move(diag)), constraints_(std::move(constraints)) {
  if (v == Validate::Full) validate_constraints();
}

void ConvexQcqp::validate_constraints() const {
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const QuadraticForm& g = constraints_[i];
    if (g.A.size() != dim() || g.b.size() != dim()) {
      throw InvalidInput("ConvexQcqp: constraint " + std::to_string(i) + " dimension");
    }
    linalg::EigenPair low =
        linalg::extreme_eigenpair(g.A, linalg::ExtremeSide::Smallest, 1e-8);
    if (!(low.value > 1e-12 * (1.0 + g.A.frobenius_norm()))) {
      throw NotPositiveDefinite("ConvexQcqp: constraint " + std::to_string(i) +
                                " is not SPD");
    }
  }
}

bool ConvexQcqp::is_feasible(const Vector& x) const {
  for (const QuadraticForm& g : constraints_) {
    if (g.value(x) > g.feas_tol()) return false;
  }
  return true;
}

double ConvexQcqp::max_violation(const Vector& x) const {
  double worst = -kInf;
  for (const QuadraticForm& g : constraints_) worst = std::max(worst, g.value(x));
  return worst;
}

// --- BAA -------------------------------------------------------------------------

ConvexSolveReport baa_loop(const Objective& f,
                           const std::vector<QuadraticForm>& constraints,
                           const Vector& x0, const BaaOptions& opt,
                           const SubproblemFn& subproblem) {
  if (opt.tol_kkt < 1e-7) {
    throw InvalidInput("baa: tol_kkt below 1e-7 is not attainable in double precision");
  }
  if (opt.max_iter < 1) throw InvalidInput("baa: max_iter must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = constraints.size();

  for (std::size_t i = 0; i < m; ++i) {
    if (constraints[i].value(x0) > constraints[i].feas_tol()) {
      throw InvalidStart("baa: starting point violates constraint " + std::to_string(i));
    }
  }

  ConvexSolveReport rep;
  Vector x = x0;
  double fx = f.value(x);
  Vector lam_balls = (static_cast<std::size_t>(opt.warm_multipliers.size()) == m)
                         ? opt.warm_multipliers
                         : Vector::Zero(static_cast<Index>(m));
  Vector mult = 2.0 * opt.ball.alpha * lam_balls;

  double kkt = kkt_error(f, constraints, x, mult);
  rep.trace.push_back({fx, kkt, 0.0});
  rep.termination = ConvexTermination::MaxIter;

  auto finish = [&](ConvexTermination why) {
    rep.solution = x;
    rep.multipliers = mult;
    rep.objective = fx;
    rep.kkt = kkt;
    rep.termination = why;
    rep.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };

  if (opt.objective_cutoff && fx < *opt.objective_cutoff) {
    return finish(ConvexTermination::CutoffReached);
  }
  if (kkt <= opt.tol_kkt) return finish(ConvexTermination::Converged);

  for (int k = 1; k <= opt.max_iter; ++k) {
    rep.iterations = k;

    std::vector<Ball> balls;
    balls.reserve(m);
    for (const QuadraticForm& g : constraints) balls.push_back(ball_map(g, x, opt.ball));

    DualAscentResult sub = subproblem(balls, lam_balls);
    lam_balls = sub.multipliers;
    mult = 2.0 * opt.ball.alpha * lam_balls;
    if (!sub.converged) {
      kkt = kkt_error(f, constraints, x, mult);
      rep.trace.push_back({fx, kkt, 0.0});
      return finish(ConvexTermination::StepCollapse);
    }
    sub.point = clip_into_balls(x, sub.point, balls);
    if ((sub.point - x).norm() <= 1e-13 * (1.0 + x.norm())) {
      // The subproblem reproduces the current point: the step has collapsed
      // even though tau would formally be 1.
      kkt = kkt_error(f, constraints, x, mult);
      rep.trace.push_back({fx, kkt, 0.0});
      if (kkt <= opt.tol_kkt) return finish(ConvexTermination::Converged);
      return finish(ConvexTermination::StepCollapse);
    }

    double tau = feasible_step(x, sub.point, constraints);
    Vector x_try = x + tau * (sub.point - x);
    double f_try = f.value(x_try);
    // Largest feasible step is a descent step in exact arithmetic; halve only to
    // absorb floating-point wobble so the f-trace stays nonincreasing.
    int halvings = 0;
    while (f_try > fx && halvings < 80) {
      tau *= 0.5;
      x_try = x + tau * (sub.point - x);
      f_try = f.value(x_try);
      ++halvings;
    }
    if (f_try > fx) {
      tau = 0.0;
      x_try = x;
      f_try = fx;
    }

    x = x_try;
    fx = f_try;
    kkt = kkt_error(f, constraints, x, mult);
    rep.trace.push_back({fx, kkt, tau});

    if (kkt <= opt.tol_kkt) return finish(ConvexTermination::Converged);
    if (opt.objective_cutoff && fx < *opt.objective_cutoff) {
      return finish(ConvexTermination::CutoffReached);
    }
    if (tau <= 1e-12) return finish(ConvexTermination::StepCollapse);
  }
  return finish(ConvexTermination::MaxIter);
}

ConvexSolveReport baa_solve(const ConvexQcqp& p, const Vector& x0, const BaaOptions& opt) {
  const DiagonalizedObjective& diag = p.diagonalized();
  SubproblemFn sub = [&diag](const std::vector<Ball>& balls, const Vector& warm) {
    return solve_ball_subproblem(diag, balls, warm);
  };
  return baa_loop(p.objective(), p.constraints(), x0, opt, sub);
}

}  // namespace ebb
