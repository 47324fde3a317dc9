#include "ebb/probgen.hpp"

#include "ebb/ellipsoid.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace ebb::probgen {

namespace {

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo < iv.hi)) {
    throw InvalidInput(std::string("probgen: empty interval for ") + name);
  }
}

Vector draw_vector(rng::Xoshiro256pp& g, Index n, const Interval& iv) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = g.uniform(iv.lo, iv.hi);
  return v;
}

linalg::SymMatrix rotated(const Matrix& u, const Vector& d) {
  return linalg::SymMatrix(u * d.asDiagonal() * u.transpose());
}

}  // namespace

Matrix random_orthogonal(Index n, rng::Xoshiro256pp& gen) {
  if (n < 1) throw InvalidInput("probgen: dimension must be >= 1");
  Matrix u = Matrix::Identity(n, n);
  for (int k = 0; k < 3; ++k) {
    Vector w;
    double norm = 0.0;
    do {
      w = draw_vector(gen, n, {-1.0, 1.0});
      norm = w.norm();
    } while (norm <= 1e-8);
    w /= norm;
    u -= 2.0 * (u * w) * w.transpose();  // U <- U (I - 2ww')
  }
  return u;
}

GeneratedProblem gen_convex(Index n, std::size_t m, std::uint64_t seed,
                            const ConvexOptions& opt) {
  if (n < 1) throw InvalidInput("probgen: dimension must be >= 1");
  if (m < 1) throw InvalidInput("probgen: at least one constraint is required");
  check_interval(opt.diag, "diag");
  check_interval(opt.linear, "linear");
  check_interval(opt.point, "point");
  check_interval(opt.slack, "slack");
  if (opt.diag.lo < 0.0) throw InvalidInput("probgen: convex diag range must be >= 0");
  if (opt.slack.lo < 0.0) throw InvalidInput("probgen: slack range must be >= 0");

  rng::Xoshiro256pp g(seed);
  const Matrix u = random_orthogonal(n, g);

  Vector d0 = draw_vector(g, n, opt.diag);
  if (opt.psd) d0[0] = 0.0;
  const Vector b0 = draw_vector(g, n, opt.linear);

  std::vector<Vector> di(m), bi(m);
  for (std::size_t i = 0; i < m; ++i) {
    di[i] = draw_vector(g, n, opt.diag);
    bi[i] = draw_vector(g, n, opt.linear);
  }
  const Vector p = draw_vector(g, n, opt.point);
  const Vector s = draw_vector(g, static_cast<Index>(m), opt.slack);

  GeneratedProblem out;
  out.objective = Objective{rotated(u, d0), b0, 0.0};
  out.constraints.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    linalg::SymMatrix a = rotated(u, di[i]);
    const double c = -(p.dot(a.mat() * p) + bi[i].dot(p)) - s[static_cast<Index>(i)];
    out.constraints.push_back(QuadraticForm{std::move(a), bi[i], c});
  }
  out.planted = p;
  out.slacks = s;
  out.negative_eigenvalues = 0;
  out.seed = seed;
  out.kind = opt.psd ? "psd" : "convex";
  return out;
}

GeneratedProblem gen_indefinite(Index n, std::size_t m, std::uint64_t seed,
                                const IndefiniteOptions& opt) {
  if (n < 1) throw InvalidInput("probgen: dimension must be >= 1");
  if (m < 1) throw InvalidInput("probgen: at least one constraint is required");
  check_interval(opt.objective_diag, "objective_diag");
  check_interval(opt.objective_linear, "objective_linear");
  check_interval(opt.shape_diag, "shape_diag");
  check_interval(opt.center, "center");
  if (opt.shape_diag.lo < 0.0) {
    throw InvalidInput("probgen: shape_diag range must be >= 0");
  }
  if (!(opt.center_offset > 0.0 && opt.center_offset < 1.0)) {
    throw InvalidInput("probgen: center_offset must lie in (0, 1)");
  }

  rng::Xoshiro256pp g(seed);
  const Matrix u = random_orthogonal(n, g);

  const Vector d0 = draw_vector(g, n, opt.objective_diag);
  const Vector b0 = draw_vector(g, n, opt.objective_linear);

  GeneratedProblem out;
  out.objective = Objective{rotated(u, d0), b0, 0.0};
  out.negative_eigenvalues = static_cast<int>((d0.array() < 0.0).count());
  out.seed = seed;
  out.kind = "indefinite";
  out.constraints.reserve(m);

  // (x-q)'A(x-q) <= 1 expanded to standard form; A = B^{-1} = U diag(1/d) U'.
  auto shell = [&](const Vector& d, const Vector& q) {
    linalg::SymMatrix a = rotated(u, d.cwiseInverse());
    return QuadraticForm{a, -2.0 * (a.mat() * q), q.dot(a.mat() * q) - 1.0};
  };

  const Vector d1 = draw_vector(g, n, opt.shape_diag);
  const Vector c1 = draw_vector(g, n, opt.center);
  out.constraints.push_back(shell(d1, c1));
  out.planted = c1;

  if (m >= 2) {
    const MajorAxis ax = major_axis(Ellipsoid::from_center(c1, rotated(u, d1)));
    const Vector c2 = c1 + opt.center_offset * ax.half_length * ax.direction;
    const Vector d2 = draw_vector(g, n, opt.shape_diag);
    out.constraints.push_back(shell(d2, c2));
    // offset^2 < 1 keeps c2 strictly inside E1, and g2(c2) = -1.
    out.planted = c2;

    for (std::size_t i = 2; i < m; ++i) {
      const Vector dk = draw_vector(g, n, opt.shape_diag);
      Vector w;
      double norm = 0.0;
      do {
        w = draw_vector(g, n, {-1.0, 1.0});
        norm = w.norm();
      } while (norm <= 1e-8);
      out.constraints.push_back(
          shell(dk, c1 + (opt.center_offset * ax.half_length / norm) * w));
    }
  }
  return out;
}

}  // namespace ebb::probgen
