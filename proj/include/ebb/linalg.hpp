#pragma once

#include "ebb/types.hpp"

namespace ebb::linalg {

// Dense symmetric matrix. Construction symmetrizes (M + M')/2 and rejects
// non-finite entries, so downstream kernels can assume exact symmetry.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix m);

  static SymMatrix identity(Index n);
  static SymMatrix diagonal(const Vector& d);

  Index size() const { return mat_.rows(); }
  const Matrix& mat() const { return mat_; }
  double operator()(Index i, Index j) const { return mat_(i, j); }

  double trace() const { return mat_.trace(); }
  double frobenius_norm() const { return mat_.norm(); }
  Vector apply(const Vector& x) const { return mat_ * x; }
  double quad(const Vector& x) const { return x.dot(mat_ * x); }

 private:
  Matrix mat_;
};

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column i pairs with eigenvalues[i], orthonormal
};

// Full symmetric eigendecomposition by cyclic Jacobi rotations.
// Post: ||M v_i - lambda_i v_i|| <= 1e-10 * (1 + ||M||_F) for every pair.
EigenDecomposition sym_eig(const SymMatrix& m);

enum class ExtremeSide { Smallest, Largest };

struct EigenPair {
  double value;
  Vector vector;  // unit norm
};

// One extreme eigenpair by power iteration on the Gershgorin-shifted matrix
// (s*I - M for the smallest pair, M - l*I for the largest). On stagnation the
// iteration restarts once from a fresh deterministic vector, then falls back
// to the full Jacobi decomposition; ConvergenceFailure (carrying the best
// Rayleigh pair found) is reserved for inputs even that cannot resolve.
EigenPair extreme_eigenpair(const SymMatrix& m, ExtremeSide side,
                            double tol = 1e-10, int max_iter = 20000);

// SPD Cholesky factorization M = L L'. Throws NotPositiveDefinite when a pivot
// falls below 1e-14 * trace(M)/n.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SymMatrix& m);

  Index size() const { return lower_.rows(); }
  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;
  Matrix inverse() const;
  double log_det() const;   // log det M = 2 sum log L_ii
  double min_pivot() const { return min_pivot_; }

 private:
  Matrix lower_;
  double min_pivot_;
};

Vector solve_spd(const SymMatrix& m, const Vector& rhs);

}  // namespace ebb::linalg
