#include "ebb/ellipsoid.hpp"

#include <cmath>

namespace ebb {
namespace {

bool shape_degenerate(const linalg::CholeskyFactor& factor, const linalg::SymMatrix& b) {
  const double threshold = 1e-13 * b.trace() / static_cast<double>(b.size());
  return factor.min_pivot() < threshold;
}

}  // namespace

Ellipsoid Ellipsoid::from_quadratic(linalg::SymMatrix a, Vector b, double rho) {
  if (b.size() != a.size()) throw InvalidInput("Ellipsoid: A/b dimension mismatch");
  if (!b.allFinite() || !std::isfinite(rho)) {
    throw InvalidInput("Ellipsoid: non-finite data");
  }
  linalg::CholeskyFactor factor(a);  // throws NotPositiveDefinite unless A SPD

  Ellipsoid e;
  e.center_ = factor.solve(b);
  e.kappa_ = rho + e.center_.dot(a.mat() * e.center_);
  if (!(e.kappa_ > 0)) {
    throw EmptyEllipsoid("Ellipsoid: rho + c'Ac <= 0, empty interior");
  }
  linalg::SymMatrix shape(e.kappa_ * factor.inverse());
  linalg::CholeskyFactor shape_factor(shape);
  e.degenerate_ = shape_degenerate(shape_factor, shape);
  e.shape_ = std::move(shape);
  e.a_ = std::move(a);
  e.b_ = std::move(b);
  e.rho_ = rho;
  return e;
}

Ellipsoid Ellipsoid::from_center(Vector c, linalg::SymMatrix b_shape) {
  if (c.size() != b_shape.size()) throw InvalidInput("Ellipsoid: c/B dimension mismatch");
  if (!c.allFinite()) throw InvalidInput("Ellipsoid: non-finite center");
  linalg::CholeskyFactor factor(b_shape);  // throws if B not SPD

  Ellipsoid e;
  e.a_ = linalg::SymMatrix(factor.inverse());
  e.b_ = e.a_.mat() * c;
  e.rho_ = 1.0 - c.dot(e.b_);
  e.kappa_ = 1.0;
  e.degenerate_ = shape_degenerate(factor, b_shape);
  e.center_ = std::move(c);
  e.shape_ = std::move(b_shape);
  return e;
}

Ellipsoid::Membership Ellipsoid::contains(const Vector& x) const {
  if (x.size() != dim()) throw InvalidInput("Ellipsoid::contains: dimension mismatch");
  const double slack = a_.quad(x) - 2.0 * b_.dot(x) - rho_;
  return {slack <= membership_tol(), slack};
}

MajorAxis major_axis(const Ellipsoid& e) {
  // Largest eigenpair of B and smallest of A share eigenvectors; iterating on B
  // directly keeps the dominant mode the one we want without an extra shift.
  linalg::EigenPair top = linalg::extreme_eigenpair(e.shape(), linalg::ExtremeSide::Largest);
  Vector y = top.vector;
  // s from the A-Rayleigh quotient puts mu on the boundary exactly (up to rounding):
  // (mu - c)' A (mu - c) = s^2 y'Ay = kappa.
  const double rayleigh_a = y.dot(e.quad_matrix().mat() * y);
  const double s = std::sqrt(e.kappa() / rayleigh_a);
  return {y, s, e.center() + s * y};
}

double diameter(const Ellipsoid& e) { return 2.0 * major_axis(e).half_length; }

AffineUnderestimate best_affine_underestimate(const Ellipsoid& e) {
  MajorAxis axis = major_axis(e);
  const Vector& c = e.center();
  const Vector& mu = axis.extreme_point;
  AffineUnderestimate out;
  out.slope = -2.0 * c;
  out.offset = 2.0 * c.dot(mu) - mu.squaredNorm();
  out.gap = axis.half_length * axis.half_length;
  out.witness = mu;
  return out;
}

Bisection bisect(const Ellipsoid& e, const Vector& v) {
  const Index n = e.dim();
  if (v.size() != n) throw InvalidInput("bisect: direction dimension mismatch");
  if (!v.allFinite()) throw InvalidInput("bisect: non-finite direction");

  const Vector bv = e.shape().mat() * v;
  const double vbv = v.dot(bv);
  if (!(vbv > 0)) return {BisectStatus::DegenerateDirection, std::nullopt, std::nullopt};

  const Vector d = bv / std::sqrt(vbv);
  const double nd = static_cast<double>(n);

  Vector c_plus, c_minus;
  Matrix shape_child;
  if (n == 1) {
    c_plus = e.center() + 0.5 * d;
    c_minus = e.center() - 0.5 * d;
    shape_child = 0.25 * e.shape().mat();
  } else {
    const double grow = nd * nd / (nd * nd - 1.0);
    c_plus = e.center() + d / (nd + 1.0);
    c_minus = e.center() - d / (nd + 1.0);
    shape_child = grow * (e.shape().mat() - (2.0 / (nd + 1.0)) * (d * d.transpose()));
  }

  Bisection out;
  try {
    out.plus = Ellipsoid::from_center(c_plus, linalg::SymMatrix(shape_child));
    out.minus = Ellipsoid::from_center(std::move(c_minus), linalg::SymMatrix(shape_child));
  } catch (const NotPositiveDefinite&) {
    return {BisectStatus::DegenerateEllipsoid, std::nullopt, std::nullopt};
  }
  out.status = BisectStatus::Ok;
  return out;
}

}  // namespace ebb
