#pragma once

#include "ebb/linalg.hpp"
#include "ebb/types.hpp"

#include <optional>

namespace ebb {

// Solid ellipsoid kept in both representations:
//   quadratic form  {x : x'Ax - 2b'x <= rho},  A SPD
//   center form     {x : (x - c)' B^{-1} (x - c) <= 1},  c = A^{-1} b,
//                   B = (rho + c'Ac) A^{-1}
// kappa = rho + c'Ac > 0 is required (nonempty interior), else EmptyEllipsoid.
class Ellipsoid {
 public:
  static Ellipsoid from_quadratic(linalg::SymMatrix a, Vector b, double rho);
  // Normalizes the quadratic form to A = B^{-1}, b = Ac, rho = 1 - c'Ac (kappa = 1).
  static Ellipsoid from_center(Vector c, linalg::SymMatrix b_shape);

  Index dim() const { return center_.size(); }

  const linalg::SymMatrix& quad_matrix() const { return a_; }   // A
  const Vector& quad_vector() const { return b_; }              // b
  double quad_level() const { return rho_; }                    // rho
  const Vector& center() const { return center_; }              // c
  const linalg::SymMatrix& shape() const { return shape_; }     // B
  double kappa() const { return kappa_; }                       // rho + c'Ac

  // Numerically collapsed along some axis: smallest Cholesky pivot of B fell
  // under 1e-13 * trace(B)/n. Branch-and-bound treats such a region as resolved.
  bool degenerate() const { return degenerate_; }

  struct Membership {
    bool inside;
    double slack;  // x'Ax - 2b'x - rho, <= 0 inside
  };
  Membership contains(const Vector& x) const;
  double membership_tol() const { return 1e-9 * (1.0 + std::abs(rho_)); }

 private:
  Ellipsoid() = default;

  linalg::SymMatrix a_ = linalg::SymMatrix::identity(1);
  Vector b_;
  double rho_ = 0.0;
  Vector center_;
  linalg::SymMatrix shape_ = linalg::SymMatrix::identity(1);
  double kappa_ = 0.0;
  bool degenerate_ = false;
};

struct MajorAxis {
  Vector direction;      // unit y, eigenvector of A for its smallest eigenvalue
  double half_length;    // s = sqrt(kappa / (y'Ay))
  Vector extreme_point;  // mu = c + s y, on the boundary
};

// Semi-major axis via one extreme eigenpair of the shape matrix B (equivalent to
// the smallest eigenpair of A). Propagates ConvergenceFailure.
MajorAxis major_axis(const Ellipsoid& e);

double diameter(const Ellipsoid& e);  // 2 * half_length

// Best affine underestimate of h(x) = -||x||^2 over E:
//   l*(x) = -2c'x + gamma,  gamma = 2c'mu - ||mu||^2 = ||c||^2 - s^2.
// max over E of h - l* equals s^2 = delta(E)^2/4, attained at the center.
struct AffineUnderestimate {
  Vector slope;    // -2c
  double offset;   // gamma
  double gap;      // s^2
  Vector witness;  // mu

  double evaluate(const Vector& x) const { return slope.dot(x) + offset; }
};

AffineUnderestimate best_affine_underestimate(const Ellipsoid& e);

enum class BisectStatus {
  Ok,
  DegenerateDirection,  // v'Bv <= 0 numerically
  DegenerateEllipsoid,  // a child's shape matrix lost positive definiteness
};

// Minimum-volume ellipsoids covering the two halves of E cut by the hyperplane
// v'(x - c) = 0:  d = Bv / sqrt(v'Bv), c+- = c +- d/(n+1),
// B+- = n^2/(n^2-1) (B - 2 d d'/(n+1)); at n = 1 the limit is the exact half
// interval: c+- = c +- d/2, B+- = B/4.
struct Bisection {
  BisectStatus status = BisectStatus::Ok;
  std::optional<Ellipsoid> plus;   // side with v'(x - c) >= 0
  std::optional<Ellipsoid> minus;  // engaged iff status == Ok
};

Bisection bisect(const Ellipsoid& e, const Vector& v);

}  // namespace ebb
