#include "ebb/bench.hpp"

#include "ebb/local.hpp"
#include "ebb/phase1.hpp"
#include "ebb/probgen.hpp"
#include "ebb/problem_io.hpp"
#include "ebb/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <future>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ebb::bench {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Run jobs [0, count) on up to `threads` workers; results land by index.
template <typename Fn>
void run_indexed(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::future<void>> pool;
  const int nworkers = std::min<std::size_t>(threads, count);
  pool.reserve(nworkers);
  for (int t = 0; t < nworkers; ++t) pool.push_back(std::async(std::launch::async, worker));
  for (auto& f : pool) f.get();
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t suite_seed, Index n, std::size_t m, int trial) {
  rng::SplitMix64 sm{suite_seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(n))};
  sm.next();
  sm.state ^= 0xD1B54A32D192ED03ull * static_cast<std::uint64_t>(m);
  sm.next();
  sm.state ^= 0xEB44ACCAB455D165ull * static_cast<std::uint64_t>(trial + 1);
  return sm.next();
}

std::vector<ConvexTrialRow> run_convex_suite(const ConvexSuiteOptions& opt) {
  if (opt.trials < 1) throw InvalidInput("bench: trials must be >= 1");
  std::vector<ConvexTrialRow> rows(opt.cells.size() * static_cast<std::size_t>(opt.trials));

  std::vector<std::pair<std::size_t, int>> jobs;  // (cell index, trial)
  for (std::size_t c = 0; c < opt.cells.size(); ++c) {
    for (int t = 0; t < opt.trials; ++t) jobs.emplace_back(c, t);
  }

  run_indexed(jobs.size(), opt.threads, [&](std::size_t j) {
    const auto [c, t] = jobs[j];
    const ConvexCell cell = opt.cells[c];
    ConvexTrialRow row;
    row.n = cell.n;
    row.m = cell.m;
    row.trial = t;
    row.seed = trial_seed(opt.seed, cell.n, cell.m, t);

    probgen::ConvexOptions gen_opt;
    gen_opt.psd = opt.psd;
    probgen::GeneratedProblem gp = probgen::gen_convex(cell.n, cell.m, row.seed, gen_opt);

    const auto t0 = std::chrono::steady_clock::now();
    phase1::Phase1Result ph = phase1::find_feasible(gp.constraints);
    Vector x = ph.status == phase1::FeasibilityStatus::Feasible ? ph.point : gp.planted;

    ConvexQcqp problem(Objective(gp.objective), std::vector<QuadraticForm>(gp.constraints),
                       ConvexQcqp::Validate::Trusted);

    // Outer stopping test: ||P(x - grad f(x)) - x|| <= tol, checked between
    // short solver bursts; the projector reuses its anchor and multipliers.
    Projector proj(gp.constraints, x, {}, 1e-9);
    auto displacement = [&](const Vector& y) {
      return (proj(y - gp.objective.gradient(y)) - y).norm();
    };

    constexpr int kChunk = 5, kMaxIter = 3000;
    BaaOptions bo;
    bo.tol_kkt = 1e-7;
    bo.max_iter = kChunk;
    row.pg_err = displacement(x);
    row.objective = gp.objective.value(x);
    while (row.pg_err > opt.tol && row.iterations < kMaxIter) {
      ConvexSolveReport rep = baa_solve(problem, x, bo);
      row.iterations += rep.iterations;
      x = rep.solution;
      row.objective = rep.objective;
      row.pg_err = displacement(x);
      bo.warm_multipliers = rep.multipliers / (2.0 * bo.ball.alpha);
      if (rep.termination == ConvexTermination::Converged ||
          rep.termination == ConvexTermination::StepCollapse ||
          rep.iterations == 0) {
        break;  // the solver cannot move further; score whatever was reached
      }
    }
    row.time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.success = row.pg_err <= opt.tol;
    rows[c * static_cast<std::size_t>(opt.trials) + static_cast<std::size_t>(t)] = row;
  });
  return rows;
}

void write_convex_csv(std::ostream& out, const std::string& suite,
                      const std::vector<ConvexTrialRow>& rows) {
  out << "suite,row,n,m,trial,seed,time_s,iter,pg_err,success,objective\n";
  // Group rows by (n, m) preserving first appearance order.
  std::vector<std::pair<Index, std::size_t>> cells;
  for (const ConvexTrialRow& r : rows) {
    if (std::find(cells.begin(), cells.end(), std::make_pair(r.n, r.m)) == cells.end()) {
      cells.emplace_back(r.n, r.m);
    }
  }
  for (const auto& [n, m] : cells) {
    double time_sum = 0.0, iter_sum = 0.0, pg_sum = 0.0;
    int count = 0, successes = 0;
    for (const ConvexTrialRow& r : rows) {
      if (r.n != n || r.m != m) continue;
      out << suite << ",trial," << r.n << ',' << r.m << ',' << r.trial << ',' << r.seed
          << ',' << fmt(r.time_s) << ',' << r.iterations << ',' << fmt(r.pg_err) << ','
          << (r.success ? 1 : 0) << ',' << fmt(r.objective) << '\n';
      time_sum += r.time_s;
      iter_sum += r.iterations;
      pg_sum += r.pg_err;
      ++count;
      successes += r.success ? 1 : 0;
    }
    out << suite << ",avg," << n << ',' << m << ",,," << fmt(time_sum / count) << ','
        << fmt(iter_sum / count) << ',' << fmt(pg_sum / count) << ',' << successes
        << ",\n";
  }
}

std::vector<GlobalTrialRow> run_global_suite(const GlobalSuiteOptions& opt) {
  if (opt.trials < 1) throw InvalidInput("bench: trials must be >= 1");
  std::vector<GlobalTrialRow> rows(opt.dims.size() * static_cast<std::size_t>(opt.trials));

  std::vector<std::pair<std::size_t, int>> jobs;
  for (std::size_t d = 0; d < opt.dims.size(); ++d) {
    for (int t = 0; t < opt.trials; ++t) jobs.emplace_back(d, t);
  }

  run_indexed(jobs.size(), opt.threads, [&](std::size_t j) {
    const auto [d, t] = jobs[j];
    GlobalTrialRow row;
    row.n = opt.dims[d];
    row.m = opt.m;
    row.trial = t;
    row.seed = trial_seed(opt.seed, row.n, opt.m, t);

    probgen::GeneratedProblem gp = probgen::gen_indefinite(row.n, opt.m, row.seed);
    row.neigs = gp.negative_eigenvalues;

    Qcqp problem(std::move(gp.objective), std::move(gp.constraints));
    GlobalSolveReport rep = ebl_solve(problem, opt.ebl);

    row.lb1 = rep.first_lower;
    row.ub1 = rep.first_upper;
    row.val = rep.value;
    row.it = rep.bisections;
    row.time_s = rep.time_s;
    row.termination = rep.termination;
    rows[d * static_cast<std::size_t>(opt.trials) + static_cast<std::size_t>(t)] = row;
  });
  return rows;
}

void write_global_csv(std::ostream& out, const std::string& suite,
                      const std::vector<GlobalTrialRow>& rows) {
  out << "suite,row,n,m,trial,seed,neigs,lb1,ub1,val,it,time_s,termination\n";
  for (const GlobalTrialRow& r : rows) {
    out << suite << ",trial," << r.n << ',' << r.m << ',' << r.trial << ',' << r.seed
        << ',' << r.neigs << ',' << fmt(r.lb1) << ',' << fmt(r.ub1) << ',' << fmt(r.val)
        << ',' << r.it << ',' << fmt(r.time_s) << ',' << io::to_string(r.termination)
        << '\n';
  }
}

}  // namespace ebb::bench
