#include "ebb/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace ebb::linalg {
namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

// Deterministic pseudo-random unit vector; splitmix64 stream keyed by `key`.
Vector seeded_unit_vector(Index n, std::uint64_t key) {
  std::uint64_t state = 0x9e3779b97f4a7c15ULL ^ (key * 0xbf58476d1ce4e5b9ULL);
  auto next = [&state]() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    v[i] = 2.0 * u - 1.0;
  }
  double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / norm;
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidInput("SymMatrix: matrix must be square and nonempty");
  }
  if (!all_finite(m)) {
    throw InvalidInput("SymMatrix: non-finite entries");
  }
  mat_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) {
  return SymMatrix(Matrix(d.asDiagonal()));
}

EigenDecomposition sym_eig(const SymMatrix& m) {
  const Index n = m.size();
  Matrix a = m.mat();
  Matrix v = Matrix::Identity(n, n);

  const double scale = a.norm();
  const double stop = 1e-14 * (scale > 0 ? scale : 1.0);
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= stop) break;

    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // Sort ascending, carrying eigenvector columns along.
  EigenDecomposition out;
  out.eigenvalues = a.diagonal();
  out.eigenvectors = v;
  for (Index i = 0; i < n; ++i) {
    Index best = i;
    for (Index j = i + 1; j < n; ++j)
      if (out.eigenvalues[j] < out.eigenvalues[best]) best = j;
    if (best != i) {
      std::swap(out.eigenvalues[i], out.eigenvalues[best]);
      out.eigenvectors.col(i).swap(out.eigenvectors.col(best));
    }
  }
  return out;
}

EigenPair extreme_eigenpair(const SymMatrix& m, ExtremeSide side, double tol,
                            int max_iter) {
  if (tol <= 0 || max_iter < 1) {
    throw InvalidInput("extreme_eigenpair: tol and max_iter must be positive");
  }
  const Index n = m.size();
  const Matrix& a = m.mat();

  // Gershgorin bounds make the shifted operator PSD with the wanted pair dominant.
  double upper = -std::numeric_limits<double>::infinity();
  double lower = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    double radius = 0.0;
    for (Index j = 0; j < n; ++j)
      if (j != i) radius += std::abs(a(i, j));
    upper = std::max(upper, a(i, i) + radius);
    lower = std::min(lower, a(i, i) - radius);
  }
  const double shift = (side == ExtremeSide::Smallest) ? upper : lower;

  auto apply_shifted = [&](const Vector& x) -> Vector {
    if (side == ExtremeSide::Smallest) return shift * x - a * x;
    return a * x - shift * x;
  };

  Vector v = seeded_unit_vector(n, 0x517cc1b727220a95ULL + static_cast<std::uint64_t>(n));
  double rayleigh = v.dot(a * v);
  double best_residual = std::numeric_limits<double>::infinity();
  EigenPair best{rayleigh, v};

  int stagnant = 0;
  bool restarted = false;
  double prev_rayleigh = rayleigh;

  for (int it = 0; it < max_iter; ++it) {
    Vector w = apply_shifted(v);
    const double wn = w.norm();
    if (wn <= 1e-300) {
      // Shifted operator annihilates v: v already spans an eigendirection of the
      // shift, i.e. M v = shift * v. Accept via the residual test below.
      w = v;
    }
    v = w / w.norm();
    rayleigh = v.dot(a * v);

    const double residual = (a * v - rayleigh * v).norm();
    if (residual < best_residual) {
      best_residual = residual;
      best = {rayleigh, v};
    }
    if (residual <= tol * (1.0 + std::abs(rayleigh))) {
      return {rayleigh, v};
    }

    if (std::abs(rayleigh - prev_rayleigh) < tol * (1.0 + std::abs(rayleigh))) {
      if (++stagnant >= 10) {
        if (restarted) break;
        restarted = true;
        stagnant = 0;
        v = seeded_unit_vector(n, 0x2545f4914f6cdd1dULL + static_cast<std::uint64_t>(it));
      }
    } else {
      stagnant = 0;
    }
    prev_rayleigh = rayleigh;
  }

  // A single-vector iteration cannot separate clustered extreme eigenvalues
  // (the mixing residual scales with the gap), so finish with the full Jacobi
  // decomposition instead of giving up.
  const EigenDecomposition full = sym_eig(m);
  const Index pick = side == ExtremeSide::Smallest ? 0 : n - 1;
  const EigenPair dense{full.eigenvalues[pick], full.eigenvectors.col(pick)};
  const double dense_residual =
      (a * dense.vector - dense.value * dense.vector).norm();
  if (dense_residual <= 1e-9 * (1.0 + m.frobenius_norm())) return dense;

  if (dense_residual < best_residual) best = dense;
  throw ConvergenceFailure("extreme_eigenpair: power iteration did not converge",
                           best.value, best.vector);
}

CholeskyFactor::CholeskyFactor(const SymMatrix& m) {
  const Index n = m.size();
  const Matrix& a = m.mat();
  const double threshold = 1e-14 * m.trace() / static_cast<double>(n);

  lower_ = Matrix::Zero(n, n);
  min_pivot_ = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Index k = 0; k < j; ++k) d -= lower_(j, k) * lower_(j, k);
    if (!(d >= threshold)) {
      throw NotPositiveDefinite("CholeskyFactor: pivot below threshold at column " +
                                std::to_string(j));
    }
    min_pivot_ = std::min(min_pivot_, d);
    const double ljj = std::sqrt(d);
    lower_(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Index k = 0; k < j; ++k) s -= lower_(i, k) * lower_(j, k);
      lower_(i, j) = s / ljj;
    }
  }
}

Vector CholeskyFactor::solve(const Vector& rhs) const {
  const Index n = size();
  if (rhs.size() != n) throw InvalidInput("CholeskyFactor::solve: size mismatch");
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    double s = rhs[i];
    for (Index k = 0; k < i; ++k) s -= lower_(i, k) * y[k];
    y[i] = s / lower_(i, i);
  }
  Vector x(n);
  for (Index i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (Index k = i + 1; k < n; ++k) s -= lower_(k, i) * x[k];
    x[i] = s / lower_(i, i);
  }
  return x;
}

Matrix CholeskyFactor::solve(const Matrix& rhs) const {
  if (rhs.rows() != size()) throw InvalidInput("CholeskyFactor::solve: size mismatch");
  Matrix out(rhs.rows(), rhs.cols());
  for (Index c = 0; c < rhs.cols(); ++c) out.col(c) = solve(Vector(rhs.col(c)));
  return out;
}

Matrix CholeskyFactor::inverse() const {
  Matrix inv = solve(Matrix(Matrix::Identity(size(), size())));
  return 0.5 * (inv + inv.transpose());
}

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (Index i = 0; i < size(); ++i) s += std::log(lower_(i, i));
  return 2.0 * s;
}

Vector solve_spd(const SymMatrix& m, const Vector& rhs) {
  return CholeskyFactor(m).solve(rhs);
}

}  // namespace ebb::linalg
