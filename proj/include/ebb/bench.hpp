#pragma once

#include "ebb/bnb.hpp"
#include "ebb/convex.hpp"
#include "ebb/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ebb::bench {

// One (n, m) cell of the convex suites; `trials` instances are generated and
// solved per cell.
struct ConvexCell {
  Index n;
  std::size_t m;
};

struct ConvexTrialRow {
  Index n = 0;
  std::size_t m = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double time_s = 0.0;
  int iterations = 0;
  double pg_err = 0.0;  // ||P(x - grad f(x)) - x|| at the final iterate
  bool success = false; // pg_err <= tol
  double objective = 0.0;
};

struct ConvexSuiteOptions {
  std::vector<ConvexCell> cells{{10, 4}, {30, 4}, {50, 4}};
  int trials = 30;
  std::uint64_t seed = 1;
  bool psd = false;     // table3 flavor
  double tol = 1e-4;    // success threshold on the displacement test
  int threads = 1;      // trials per cell run in parallel when > 1
};

std::vector<ConvexTrialRow> run_convex_suite(const ConvexSuiteOptions& opt);

// CSV with one row per trial plus an "avg" row per cell carrying the mean
// time/iterations/pg_err and the success count.
void write_convex_csv(std::ostream& out, const std::string& suite,
                      const std::vector<ConvexTrialRow>& rows);

struct GlobalTrialRow {
  Index n = 0;
  std::size_t m = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int neigs = 0;
  double lb1 = 0.0;
  double ub1 = 0.0;
  double val = 0.0;
  int it = 0;
  double time_s = 0.0;
  GlobalTermination termination = GlobalTermination::GapClosed;
};

struct GlobalSuiteOptions {
  std::vector<Index> dims{2, 3, 4};
  std::size_t m = 2;      // table5 uses 6
  int trials = 4;
  std::uint64_t seed = 1;
  EblOptions ebl;
  int threads = 1;
};

std::vector<GlobalTrialRow> run_global_suite(const GlobalSuiteOptions& opt);

void write_global_csv(std::ostream& out, const std::string& suite,
                      const std::vector<GlobalTrialRow>& rows);

// Deterministic per-trial seed derived from the suite seed and cell identity.
std::uint64_t trial_seed(std::uint64_t suite_seed, Index n, std::size_t m, int trial);

}  // namespace ebb::bench
