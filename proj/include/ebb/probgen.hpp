#pragma once

#include "ebb/convex.hpp"
#include "ebb/rng.hpp"
#include "ebb/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ebb::probgen {

struct Interval {
  double lo;
  double hi;
};

// Strictly convex / PSD family: shared random orthogonal U, A = U diag(d) U',
// d drawn from `diag`; planted point p with per-constraint slack s_i > 0, so
// g_i(p) = -s_i keeps p strictly feasible. `psd` zeroes the first objective
// eigenvalue after drawing.
struct ConvexOptions {
  Interval diag{0.0, 100.0};
  Interval linear{-100.0, 100.0};
  Interval point{-50.0, 50.0};
  Interval slack{0.0, 10.0};
  bool psd = false;
};

// Indefinite family: objective spectrum straddles zero (the sampled sign split
// is recorded, not forced); constraints are unit-level ellipsoids
// g_i(x) = (x - c_i)' B_i^{-1} (x - c_i) - 1 with B_i = U diag(d_i) U',
// d_i from `shape_diag`.  c_1 is drawn from `center`, c_2 sits at
// c_1 + center_offset * (semi-major axis vector of E_1), which keeps E_1 and
// E_2 overlapping; constraints 3..m reuse the same offset length along fresh
// random unit directions (their mutual intersection is not guaranteed).
struct IndefiniteOptions {
  Interval objective_diag{-30.0, 30.0};
  Interval objective_linear{-1.0, 1.0};
  Interval shape_diag{0.0, 60.0};
  Interval center{0.0, 100.0};
  double center_offset = 0.8;
};

struct GeneratedProblem {
  Objective objective;
  std::vector<QuadraticForm> constraints;
  Vector planted;  // interior for convex/psd; inside constraints 1..2 for indefinite
  Vector slacks;   // convex/psd only: g_i(planted) = -slacks[i]
  int negative_eigenvalues = 0;
  std::uint64_t seed = 0;
  std::string kind;  // "convex", "psd", "indefinite"
};

// Product of three random Householder reflections.
Matrix random_orthogonal(Index n, rng::Xoshiro256pp& gen);

GeneratedProblem gen_convex(Index n, std::size_t m, std::uint64_t seed,
                            const ConvexOptions& opt = {});
GeneratedProblem gen_indefinite(Index n, std::size_t m, std::uint64_t seed,
                                const IndefiniteOptions& opt = {});

}  // namespace ebb::probgen
