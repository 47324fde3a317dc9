#pragma once

#include "ebb/ellipsoid.hpp"
#include "ebb/linalg.hpp"
#include "ebb/rng.hpp"
#include "ebb/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace ebb::testutil {

inline constexpr double kTau = 6.283185307179586;

inline double gaussian(rng::Xoshiro256pp& g) {
  // Box-Muller; the open-interval uniforms keep the log argument positive.
  return std::sqrt(-2.0 * std::log(g.uniform01())) * std::cos(kTau * g.uniform01());
}

inline Vector unit_vector(rng::Xoshiro256pp& g, Index n) {
  Vector w(n);
  double nrm = 0.0;
  do {
    for (Index i = 0; i < n; ++i) w[i] = gaussian(g);
    nrm = w.norm();
  } while (nrm < 1e-12);
  return w / nrm;
}

// Uniform sampling inside an ellipsoid through B^{1/2}, computed with Eigen's
// eigensolver so membership checks do not lean on the code under test.
struct EllipsoidSampler {
  Vector center;
  Matrix half;
  Index n;

  explicit EllipsoidSampler(const Ellipsoid& e) : center(e.center()), n(e.dim()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(e.shape().mat());
    half = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
  }

  Vector interior(rng::Xoshiro256pp& g) const {
    const double r = std::pow(g.uniform01(), 1.0 / static_cast<double>(n));
    return center + half * (r * unit_vector(g, n));
  }

  Vector boundary(rng::Xoshiro256pp& g) const {
    return center + half * unit_vector(g, n);
  }
};

// Random SPD matrix with spectrum drawn from (lo, hi); rotation from gaussian QR.
inline Matrix random_spd(rng::Xoshiro256pp& g, Index n, double lo, double hi) {
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = gaussian(g);
  Matrix q = Eigen::HouseholderQR<Matrix>(a).householderQ();
  Vector d(n);
  for (Index i = 0; i < n; ++i) d[i] = g.uniform(lo, hi);
  return q * d.asDiagonal() * q.transpose();
}

inline Vector random_vector(rng::Xoshiro256pp& g, Index n, double lo, double hi) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = g.uniform(lo, hi);
  return v;
}

// Shrinking-grid search: scan a box, keep the best feasible point, then zoom
// into the 2.5-cell neighbourhood and repeat. Geometric accuracy in `rounds`.
template <typename FeasFn, typename ObjFn>
std::pair<double, Vector> refine_search(Vector lo, Vector hi, const FeasFn& feasible,
                                        const ObjFn& objective, int pts = 13,
                                        int rounds = 10) {
  const Index n = lo.size();
  double best = std::numeric_limits<double>::infinity();
  Vector best_x = 0.5 * (lo + hi);
  for (int round = 0; round < rounds; ++round) {
    Vector x(n);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    bool done = false;
    while (!done) {
      for (Index i = 0; i < n; ++i) {
        x[i] = lo[i] + (hi[i] - lo[i]) * idx[static_cast<std::size_t>(i)] / (pts - 1);
      }
      if (feasible(x)) {
        const double v = objective(x);
        if (v < best) {
          best = v;
          best_x = x;
        }
      }
      Index k = 0;
      while (k < n && ++idx[static_cast<std::size_t>(k)] == pts) {
        idx[static_cast<std::size_t>(k)] = 0;
        ++k;
      }
      done = k == n;
    }
    const Vector width = 2.5 * (hi - lo) / (pts - 1);
    lo = best_x - width;
    hi = best_x + width;
  }
  return {best, best_x};
}

}  // namespace ebb::testutil
