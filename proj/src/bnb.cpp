#include "ebb/bnb.hpp"

#include "ebb/local.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <string>
#include <utility>

namespace ebb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Qcqp::Qcqp(Objective obj, std::vector<QuadraticForm> constraints)
    : objective_(std::move(obj)),
      constraints_(std::move(constraints)),
      spectrum_(linalg::sym_eig(objective_.A)) {
  const Index n = objective_.b.size();
  if (n < 1) throw InvalidInput("qcqp: dimension must be >= 1");
  if (objective_.A.mat().rows() != n) {
    throw InvalidInput("qcqp: objective matrix/vector dimension mismatch");
  }
  if (constraints_.empty()) throw InvalidInput("qcqp: at least one constraint is required");
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const QuadraticForm& g = constraints_[i];
    if (g.b.size() != n || g.A.mat().rows() != n) {
      throw InvalidInput("qcqp: constraint " + std::to_string(i) + " dimension mismatch");
    }
    const double scale = 1.0 + g.A.frobenius_norm();
    linalg::EigenPair low = linalg::extreme_eigenpair(g.A, linalg::ExtremeSide::Smallest);
    if (low.value <= 1e-12 * scale) {
      throw NotPositiveDefinite("qcqp: constraint " + std::to_string(i) +
                                " is not positive definite");
    }
  }
}

ObjectiveKind Qcqp::kind() const {
  const double tol = 1e-10 * (1.0 + objective_.A.frobenius_norm());
  const double lmin = lambda_min();
  if (lmin > tol) return ObjectiveKind::Convex;
  if (lmin >= -tol) return ObjectiveKind::Psd;
  return ObjectiveKind::Indefinite;
}

int Qcqp::negative_eigenvalues() const {
  const double tol = 1e-10 * (1.0 + objective_.A.frobenius_norm());
  int count = 0;
  for (Index i = 0; i < spectrum_.eigenvalues.size(); ++i) {
    if (spectrum_.eigenvalues[i] < -tol) ++count;
  }
  return count;
}

bool Qcqp::is_feasible(const Vector& x) const {
  for (const QuadraticForm& g : constraints_) {
    if (g.value(x) > g.feas_tol()) return false;
  }
  return true;
}

double dc_sigma_value(double lambda_min) { return std::max(0.0, 0.1 - lambda_min); }

DcDecomposition dc_sigma(const Qcqp& p) { return {dc_sigma_value(p.lambda_min())}; }

Ellipsoid initial_ellipsoid(const Qcqp& p) { return p.constraints()[0].to_ellipsoid(); }

Vector branch_direction(const Ellipsoid& e) { return major_axis(e).direction; }

BoundResult lower_bound(const Ellipsoid& e, const Qcqp& p, const DcDecomposition& dc,
                        const linalg::SymMatrix& shifted_a, const Vector& warm_point,
                        const Vector& warm_multipliers, const BallMapParams& ball) {
  BoundResult out;
  phase1::Phase1Result feas = phase1::find_feasible_in(e, p.constraints(), warm_point);
  out.feasibility = feas.status;
  if (feas.status == phase1::FeasibilityStatus::Infeasible) {
    out.value = kInf;
    return out;
  }
  if (feas.status == phase1::FeasibilityStatus::Ambiguous) {
    // No usable start; the caller keeps the parent's bound for this region.
    out.value = -kInf;
    return out;
  }

  Objective fl{shifted_a, p.objective().b, p.objective().constant};
  if (dc.sigma > 0.0) {
    try {
      AffineUnderestimate under = best_affine_underestimate(e);
      fl.b = p.objective().b + dc.sigma * under.slope;
      fl.constant = p.objective().constant + dc.sigma * under.offset;
      out.dc_gap = dc.sigma * under.gap;
    } catch (const ConvergenceFailure&) {
      // Semi-major axis did not certify. trace(B) >= s^2 for any spectrum, so
      // gamma = ||c||^2 - trace(B) still underestimates; the bound is weaker
      // but sound.
      const Vector& c = e.center();
      const double tb = e.shape().trace();
      fl.b = p.objective().b + dc.sigma * (-2.0 * c);
      fl.constant = p.objective().constant + dc.sigma * (c.squaredNorm() - tb);
      out.dc_gap = dc.sigma * tb;
    }
  }

  std::vector<QuadraticForm> stacked = p.constraints();
  stacked.push_back(QuadraticForm::from_ellipsoid(e));

  Vector d_shift = p.spectrum().eigenvalues;
  d_shift.array() += dc.sigma;
  ConvexQcqp sub(DiagonalizedObjective(fl, p.spectrum().eigenvectors, d_shift),
                 std::move(stacked), ConvexQcqp::Validate::Trusted);

  BaaOptions bo;
  bo.ball = ball;
  const double grad_inf = fl.gradient(feas.point).lpNorm<Eigen::Infinity>();
  bo.tol_kkt = std::max(1e-7, 1e-8 * (1.0 + grad_inf));
  bo.max_iter = 3000;
  if (warm_multipliers.size() == static_cast<Index>(sub.num_constraints())) {
    bo.warm_multipliers = warm_multipliers / (2.0 * ball.alpha);
  }

  ConvexSolveReport rep = baa_solve(sub, feas.point, bo);
  out.minimizer = rep.solution;
  out.multipliers = rep.multipliers;
  out.objective_at_y = p.objective().value(rep.solution);

  // The primal value of a stalled relaxation solve can land above the true
  // relaxation minimum, which would poison the branch bound. The Lagrangian
  // dual value at the returned multipliers is sound by weak duality and
  // matches the primal to solver tolerance once the solve has converged.
  Matrix h = fl.A.mat();
  Vector hb = fl.b;
  double hc = fl.constant;
  const std::vector<QuadraticForm>& gs = sub.constraints();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const double mu = std::max(0.0, rep.multipliers[static_cast<Index>(i)]);
    h += mu * gs[i].A.mat();
    hb += mu * gs[i].b;
    hc += mu * gs[i].c;
  }
  try {
    linalg::CholeskyFactor hf{linalg::SymMatrix(h)};
    out.value = hc - 0.25 * hb.dot(hf.solve(hb));
  } catch (const Error&) {
    out.value = -kInf;  // sound, if useless; the caller keeps the parent bound
  }
  return out;
}

namespace {

struct Node {
  double ml = 0.0;
  std::uint64_t id = 0;
  std::uint64_t parent = 0;
  int depth = 0;
  Ellipsoid region;
  Vector warm_point;  // feasible for the constraints (not necessarily in region)
  Vector warm_mult;
};

struct NodeCmp {
  bool operator()(const Node& a, const Node& b) const {
    return a.ml < b.ml || (a.ml == b.ml && a.id < b.id);
  }
};

}  // namespace

GlobalSolveReport ebl_solve(const Qcqp& p, const EblOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  GlobalSolveReport rep;
  auto stamp = [&] {
    rep.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const Index n = p.dim();
  const std::uint64_t budget =
      opt.node_budget ? *opt.node_budget : 500 * static_cast<std::uint64_t>(n);
  const DcDecomposition dc = dc_sigma(p);

  Matrix shifted_mat = p.objective().A.mat();
  shifted_mat.diagonal().array() += dc.sigma;
  const linalg::SymMatrix shifted(shifted_mat);

  phase1::Phase1Result start = phase1::find_feasible(p.constraints());
  if (start.status == phase1::FeasibilityStatus::Infeasible) {
    rep.termination = GlobalTermination::Infeasible;
    rep.value = kInf;
    rep.first_lower = kInf;
    rep.first_upper = kInf;
    stamp();
    return rep;
  }
  if (start.status == phase1::FeasibilityStatus::Ambiguous) {
    rep.termination = GlobalTermination::AmbiguousStart;
    rep.value = kInf;
    rep.first_lower = -kInf;
    rep.first_upper = kInf;
    stamp();
    return rep;
  }

  Ellipsoid root_region = initial_ellipsoid(p);

  double ub = kInf;
  Vector incumbent;
  auto consider = [&](const Vector& x, double fx) {
    if (fx < ub) {
      ub = fx;
      incumbent = x;
    }
  };
  // Promising feasible points get a local polish before the incumbent update.
  auto polish = [&](const Vector& y, double fy) {
    const bool promising = fy < ub + opt.eps_abs;
    consider(y, fy);
    if (!promising || opt.local_budget <= 0) return;
    try {
      PgOptions po;
      po.tol = 1e-6;
      po.max_iter = opt.local_budget;
      LocalSolveReport lr = projected_gradient(p.objective(), p.constraints(), y, po);
      consider(lr.solution, lr.objective);
    } catch (const Error&) {
      // keep the unpolished candidate
    }
  };

  consider(start.point, p.objective().value(start.point));

  BoundResult root =
      lower_bound(root_region, p, dc, shifted, start.point, Vector(), opt.ball);
  ++rep.nodes_explored;
  if (root.feasibility != phase1::FeasibilityStatus::Feasible) {
    // Cannot happen for a consistent phase-one point; bail out honestly.
    rep.termination = GlobalTermination::AmbiguousStart;
    rep.value = ub;
    rep.incumbent = incumbent;
    rep.first_lower = -kInf;
    rep.first_upper = ub;
    stamp();
    return rep;
  }
  polish(root.minimizer, root.objective_at_y);

  double lb = std::min(root.value, ub);
  rep.first_lower = root.value;
  rep.first_upper = ub;
  rep.lb_trace.push_back(lb);
  rep.ub_trace.push_back(ub);
  if (opt.collect_node_log) {
    rep.node_log.push_back({0, 0, 0, root.value, root.objective_at_y, root.dc_gap, 'F'});
  }

  std::set<Node, NodeCmp> queue;
  queue.insert(Node{root.value, 0, 0, 0, root_region, root.minimizer, root.multipliers});
  std::uint64_t next_id = 1;
  double resolved_lb = kInf;  // best bound among regions resolved without bisection

  const auto feas_char = [](phase1::FeasibilityStatus s) {
    switch (s) {
      case phase1::FeasibilityStatus::Feasible: return 'F';
      case phase1::FeasibilityStatus::Infeasible: return 'I';
      default: return 'A';
    }
  };

  GlobalTermination why = GlobalTermination::GapClosed;
  while (true) {
    const double qmin = queue.empty() ? kInf : queue.begin()->ml;
    lb = std::max(lb, std::min({qmin, resolved_lb, ub}));
    if (ub - lb <= std::max(opt.eps_abs, opt.eps_rel * std::abs(lb))) {
      why = GlobalTermination::GapClosed;
      break;
    }
    if (queue.empty()) {
      // Only numerically collapsed regions kept the gap open.
      why = GlobalTermination::Degenerate;
      break;
    }
    if (rep.bisections >= static_cast<int>(budget)) {
      why = GlobalTermination::NodeBudget;
      break;
    }

    Node cur = *queue.begin();
    queue.erase(queue.begin());
    if (cur.ml > ub) {
      ++rep.nodes_pruned;
      continue;
    }
    if (cur.region.degenerate()) {
      resolved_lb = std::min(resolved_lb, cur.ml);
      continue;
    }

    Vector dir;
    try {
      dir = branch_direction(cur.region);
    } catch (const ConvergenceFailure&) {
      resolved_lb = std::min(resolved_lb, cur.ml);
      continue;
    }
    Bisection bis = bisect(cur.region, dir);
    if (bis.status != BisectStatus::Ok) {
      resolved_lb = std::min(resolved_lb, cur.ml);
      continue;
    }
    ++rep.bisections;

    auto eval = [&](const Ellipsoid& child) {
      return lower_bound(child, p, dc, shifted, cur.warm_point, cur.warm_mult, opt.ball);
    };
    BoundResult res_plus, res_minus;
    if (opt.parallel_children) {
      auto fut = std::async(std::launch::async, eval, std::cref(*bis.plus));
      res_minus = eval(*bis.minus);
      res_plus = fut.get();
    } else {
      res_plus = eval(*bis.plus);
      res_minus = eval(*bis.minus);
    }
    rep.nodes_explored += 2;

    auto process = [&](std::uint64_t id, const Ellipsoid& region, const BoundResult& res) {
      if (res.feasibility == phase1::FeasibilityStatus::Infeasible) {
        ++rep.nodes_pruned;
        if (opt.collect_node_log) {
          rep.node_log.push_back({id, cur.id, cur.depth + 1, kInf, kNan, 0.0, 'I'});
        }
        return;
      }
      const double ml = std::max(res.value, cur.ml);  // child bound never below parent
      double fy = kNan;
      Vector wp = cur.warm_point;
      Vector wm = cur.warm_mult;
      if (res.feasibility == phase1::FeasibilityStatus::Feasible) {
        fy = res.objective_at_y;
        wp = res.minimizer;
        wm = res.multipliers;
        polish(res.minimizer, fy);
      }
      if (opt.collect_node_log) {
        rep.node_log.push_back(
            {id, cur.id, cur.depth + 1, ml, fy, res.dc_gap, feas_char(res.feasibility)});
      }
      if (ml <= ub) {
        queue.insert(Node{ml, id, cur.id, cur.depth + 1, region, wp, wm});
      } else {
        ++rep.nodes_pruned;
      }
    };
    const std::uint64_t id_plus = next_id++;
    const std::uint64_t id_minus = next_id++;
    process(id_plus, *bis.plus, res_plus);
    process(id_minus, *bis.minus, res_minus);

    while (!queue.empty() && std::prev(queue.end())->ml > ub) {
      queue.erase(std::prev(queue.end()));
      ++rep.nodes_pruned;
    }

    const double qm = queue.empty() ? kInf : queue.begin()->ml;
    lb = std::max(lb, std::min({qm, resolved_lb, ub}));
    rep.lb_trace.push_back(lb);
    rep.ub_trace.push_back(ub);
  }

  lb = std::min(lb, ub);
  rep.lb_trace.push_back(lb);
  rep.ub_trace.push_back(ub);
  rep.termination = why;
  rep.incumbent = incumbent;
  rep.value = ub;
  stamp();
  return rep;
}

}  // namespace ebb
