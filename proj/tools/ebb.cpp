#include "ebb/bench.hpp"
#include "ebb/bnb.hpp"
#include "ebb/convex.hpp"
#include "ebb/phase1.hpp"
#include "ebb/probgen.hpp"
#include "ebb/problem_io.hpp"
#include "ebb/verify.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

// Exit codes (stable contract): 0 success, 2 infeasible, 3 solver failure,
// 4 usage / invalid input.
constexpr int kOk = 0;
constexpr int kInfeasible = 2;
constexpr int kSolverFailure = 3;
constexpr int kUsage = 4;

double env_or(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const double parsed = std::strtod(v, &end);
  if (end == v || *end != '\0') {
    throw ebb::InvalidInput(std::string("environment variable ") + name +
                            " is not a number: " + v);
  }
  return parsed;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ebb::InvalidInput("cannot write: " + path);
  out << text;
}

void emit_json(const std::optional<std::string>& path, const nlohmann::json& j) {
  if (path) write_text(*path, j.dump(2) + "\n");
}

int cmd_gen(const std::string& kind, ebb::Index n, std::size_t m, std::uint64_t seed,
            const std::string& out_path) {
  ebb::probgen::GeneratedProblem gp;
  if (kind == "convex" || kind == "psd") {
    ebb::probgen::ConvexOptions opt;
    opt.psd = kind == "psd";
    gp = ebb::probgen::gen_convex(n, m, seed, opt);
  } else if (kind == "indefinite") {
    gp = ebb::probgen::gen_indefinite(n, m, seed);
  } else {
    throw ebb::InvalidInput("gen: unknown kind '" + kind + "'");
  }

  ebb::io::ProblemFile pf;
  pf.objective = gp.objective;
  pf.constraints = gp.constraints;
  pf.meta.kind = gp.kind;
  pf.meta.generator = "ebb-gen 1.0";
  pf.meta.seed = seed;
  pf.meta.neigs = gp.negative_eigenvalues;
  write_text(out_path, ebb::io::to_json(pf).dump(2) + "\n");
  if (out_path != "-") {
    std::cout << "wrote " << out_path << " (" << gp.kind << ", n=" << n << ", m=" << m
              << ", neigs=" << gp.negative_eigenvalues << ")\n";
  }
  return kOk;
}

ebb::io::ProblemFile load_checked(const std::string& path) {
  ebb::io::ProblemFile pf = ebb::io::load_problem(path);
  if (pf.max_asymmetry > 1e-12) {
    std::cerr << "warning: symmetrized matrices with asymmetry up to " << pf.max_asymmetry
              << "\n";
  }
  return pf;
}

int cmd_solve_convex(const std::string& file, double alpha, double beta, double tol,
                     int max_iter, const std::optional<std::string>& json_out) {
  ebb::io::ProblemFile pf = load_checked(file);
  ebb::ConvexQcqp problem(pf.objective, pf.constraints);  // full validation

  ebb::phase1::Phase1Result ph = ebb::phase1::find_feasible(pf.constraints);
  if (ph.status == ebb::phase1::FeasibilityStatus::Infeasible) {
    std::cout << "infeasible (constraint " << ph.stage << " certified empty intersection)\n";
    return kInfeasible;
  }
  if (ph.status == ebb::phase1::FeasibilityStatus::Ambiguous) {
    std::cout << "phase one ambiguous at constraint " << ph.stage
              << ": no strictly interior point certified\n";
    return kSolverFailure;
  }

  ebb::BaaOptions opt;
  opt.ball = {alpha, beta};
  opt.tol_kkt = tol;
  opt.max_iter = max_iter;
  ebb::ConvexSolveReport rep = ebb::baa_solve(problem, ph.point, opt);

  std::cout << "objective " << rep.objective << "  kkt " << rep.kkt << "  iterations "
            << rep.iterations << "  termination " << ebb::io::to_string(rep.termination)
            << "  time_s " << rep.time_s << "\n";
  emit_json(json_out, ebb::io::to_json(rep));
  return kOk;
}

int cmd_solve_global(const std::string& file, const ebb::EblOptions& opt, bool node_log,
                     const std::optional<std::string>& json_out) {
  ebb::io::ProblemFile pf = load_checked(file);
  ebb::Qcqp problem(pf.objective, pf.constraints);

  ebb::EblOptions run = opt;
  run.collect_node_log = node_log;
  ebb::GlobalSolveReport rep = ebb::ebl_solve(problem, run);

  if (rep.termination == ebb::GlobalTermination::Infeasible) {
    std::cout << "infeasible\n";
    emit_json(json_out, ebb::io::to_json(rep));
    return kInfeasible;
  }
  if (rep.termination == ebb::GlobalTermination::AmbiguousStart) {
    std::cout << "phase one ambiguous: cannot certify feasibility\n";
    emit_json(json_out, ebb::io::to_json(rep));
    return kSolverFailure;
  }

  std::cout << "val " << rep.value << "  lb " << rep.lb_trace.back() << "  lb1 "
            << rep.first_lower << "  ub1 " << rep.first_upper << "  it " << rep.bisections
            << "  nodes " << rep.nodes_explored << "  termination "
            << ebb::io::to_string(rep.termination) << "  time_s " << rep.time_s << "\n";
  emit_json(json_out, ebb::io::to_json(rep));
  return kOk;
}

int cmd_bench(const std::string& suite, int trials, const std::vector<ebb::Index>& dims,
              std::size_t m, std::uint64_t seed, int threads, const std::string& out_path) {
  std::ostringstream csv;
  if (suite == "table2" || suite == "table3") {
    ebb::bench::ConvexSuiteOptions opt;
    opt.psd = suite == "table3";
    opt.trials = trials > 0 ? trials : 30;
    opt.seed = seed;
    opt.threads = threads;
    if (!dims.empty()) {
      opt.cells.clear();
      for (ebb::Index n : dims) opt.cells.push_back({n, m == 0 ? 4 : m});
    } else if (m != 0) {
      for (auto& cell : opt.cells) cell.m = m;
    }
    auto rows = ebb::bench::run_convex_suite(opt);
    ebb::bench::write_convex_csv(csv, suite, rows);
  } else if (suite == "table4" || suite == "table5") {
    ebb::bench::GlobalSuiteOptions opt;
    opt.m = m != 0 ? m : (suite == "table5" ? 6 : 2);
    opt.trials = trials > 0 ? trials : 4;
    opt.seed = seed;
    opt.threads = threads;
    if (!dims.empty()) opt.dims = dims;
    if (suite == "table5" && dims.empty()) opt.dims = {2, 3};
    auto rows = ebb::bench::run_global_suite(opt);
    ebb::bench::write_global_csv(csv, suite, rows);
  } else {
    throw ebb::InvalidInput("bench: unknown suite '" + suite + "'");
  }
  write_text(out_path, csv.str());
  if (out_path != "-") std::cout << "wrote " << out_path << "\n";
  return kOk;
}

int cmd_verify(const std::string& file, int resolution, const std::optional<std::string>& json_out) {
  ebb::io::ProblemFile pf = load_checked(file);
  if (pf.objective.b.size() > 6) {
    throw ebb::InvalidInput("verify: n > 6 refused (exhaustive oracle cost)");
  }

  ebb::verify::OracleOptions oo;
  oo.resolution = resolution;
  ebb::verify::OracleReport oracle;
  try {
    oracle = ebb::verify::grid_oracle(pf.objective, pf.constraints, oo);
  } catch (const ebb::EmptyEllipsoid&) {
    // First constraint's sublevel set is empty: trivially infeasible, and the
    // oracle has no box to scan. Leave feasible_point_found false.
  }

  ebb::Qcqp problem(pf.objective, pf.constraints);
  ebb::GlobalSolveReport rep = ebb::ebl_solve(problem);

  nlohmann::json j;
  j["oracle_found_feasible"] = oracle.feasible_point_found;
  j["oracle_value"] = oracle.feasible_point_found ? nlohmann::json(oracle.best_value)
                                                  : nlohmann::json(nullptr);
  j["oracle_grid_value"] = oracle.feasible_point_found ? nlohmann::json(oracle.grid_value)
                                                       : nlohmann::json(nullptr);
  j["feasible_grid_points"] = oracle.feasible_points;
  j["solver_termination"] = ebb::io::to_string(rep.termination);

  const bool solver_infeasible = rep.termination == ebb::GlobalTermination::Infeasible;
  if (!oracle.feasible_point_found && solver_infeasible) {
    j["agreement"] = "both-infeasible";
    std::cout << j.dump(2) << "\n";
    emit_json(json_out, j);
    return kInfeasible;
  }
  if (oracle.feasible_point_found && solver_infeasible) {
    j["agreement"] = "solver-claims-infeasible-but-grid-found-point";
    std::cout << j.dump(2) << "\n";
    emit_json(json_out, j);
    return kSolverFailure;
  }
  if (!oracle.feasible_point_found) {
    // Thin feasible sets can slip between grid points; report the solver side.
    j["agreement"] = "grid-found-nothing";
    j["solver_value"] = rep.value;
    std::cout << j.dump(2) << "\n";
    emit_json(json_out, j);
    return kOk;
  }

  j["solver_value"] = rep.value;
  j["gap"] = rep.value - oracle.best_value;
  j["agreement"] = "compared";
  std::cout << j.dump(2) << "\n";
  emit_json(json_out, j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "QCQP toolkit: global and convex solvers over intersections of ellipsoids.\n"
      "Environment overrides for defaults: EBB_TOL_KKT (solve-convex --tol),\n"
      "EBB_EPS_ABS / EBB_EPS_REL (solve-global --eps-abs / --eps-rel),\n"
      "EBB_ALPHA / EBB_BETA (ball map parameters for solve-convex).\n"
      "Exit codes: 0 ok, 2 infeasible, 3 solver failure, 4 usage/bad input."};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random problem file");
  std::string gen_kind = "convex";
  ebb::Index gen_n = 10;
  std::size_t gen_m = 4;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "-";
  gen->add_option("--kind", gen_kind, "convex | psd | indefinite")
      ->check(CLI::IsMember({"convex", "psd", "indefinite"}));
  gen->add_option("--n", gen_n, "dimension")->required()->check(CLI::PositiveNumber);
  gen->add_option("--m", gen_m, "number of constraints")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "output path ('-' for stdout)");

  // solve-convex
  auto* sc = app.add_subcommand("solve-convex", "Solve a convex instance with the ball method");
  std::string sc_file;
  double sc_alpha = 1.0, sc_beta = 1.0, sc_tol = 1e-4;
  int sc_max_iter = 10000;
  std::optional<std::string> sc_json;
  sc->add_option("--file", sc_file, "problem JSON")->required();
  sc->add_option("--alpha", sc_alpha, "ball map step (default 1, env EBB_ALPHA)");
  sc->add_option("--beta", sc_beta, "ball map slack weight (default 1, env EBB_BETA)");
  sc->add_option("--tol", sc_tol, "KKT tolerance (default 1e-4, env EBB_TOL_KKT)");
  sc->add_option("--max-iter", sc_max_iter, "iteration cap");
  sc->add_option("--json-out", sc_json, "write the full report as JSON ('-' for stdout)");

  // solve-global
  auto* sg = app.add_subcommand("solve-global", "Global solve by ellipsoidal branch and bound");
  std::string sg_file;
  double sg_eps_abs = 1e-5, sg_eps_rel = 1e-2;
  std::optional<std::uint64_t> sg_budget;
  int sg_local = 500;
  bool sg_parallel = false, sg_node_log = false;
  std::optional<std::string> sg_json;
  sg->add_option("--file", sg_file, "problem JSON")->required();
  sg->add_option("--eps-abs", sg_eps_abs, "absolute gap tolerance (default 1e-5, env EBB_EPS_ABS)");
  sg->add_option("--eps-rel", sg_eps_rel, "relative gap tolerance (default 1e-2, env EBB_EPS_REL)");
  sg->add_option("--node-budget", sg_budget, "bisection budget (default 500*n)");
  sg->add_option("--local-budget", sg_local, "projected-gradient iterations per polish");
  sg->add_flag("--parallel", sg_parallel, "evaluate the two child bounds concurrently");
  sg->add_flag("--node-log", sg_node_log, "include per-node diagnostics in the JSON report");
  sg->add_option("--json-out", sg_json, "write the full report as JSON ('-' for stdout)");

  // bench
  auto* be = app.add_subcommand("bench", "Run a benchmark suite, emit CSV");
  std::string be_suite;
  int be_trials = 0, be_threads = 1;
  std::vector<ebb::Index> be_dims;
  std::size_t be_m = 0;
  std::uint64_t be_seed = 1;
  std::string be_out = "-";
  be->add_option("--suite", be_suite, "table2 | table3 | table4 | table5")
      ->required()
      ->check(CLI::IsMember({"table2", "table3", "table4", "table5"}));
  be->add_option("--trials", be_trials, "trials per cell (default: 30 convex, 4 global)");
  be->add_option("--dims", be_dims, "dimensions, e.g. --dims 2 3 4")->delimiter(',');
  be->add_option("--m", be_m, "constraints per instance (default: suite-specific)");
  be->add_option("--seed", be_seed, "suite seed");
  be->add_option("--threads", be_threads, "parallel trial workers");
  be->add_option("--out", be_out, "CSV path ('-' for stdout)");

  // verify
  auto* ve = app.add_subcommand("verify", "Compare the solver against the exhaustive grid oracle");
  std::string ve_file;
  int ve_res = 400;
  std::optional<std::string> ve_json;
  ve->add_option("--file", ve_file, "problem JSON (n <= 6)")->required();
  ve->add_option("--resolution", ve_res, "grid points per axis (default 400)")
      ->check(CLI::Range(2, 100000));
  ve->add_option("--json-out", ve_json, "also write the comparison as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_kind, gen_n, gen_m, gen_seed, gen_out);
    if (*sc) {
      sc_tol = sc->count("--tol") ? sc_tol : env_or("EBB_TOL_KKT", sc_tol);
      sc_alpha = sc->count("--alpha") ? sc_alpha : env_or("EBB_ALPHA", sc_alpha);
      sc_beta = sc->count("--beta") ? sc_beta : env_or("EBB_BETA", sc_beta);
      return cmd_solve_convex(sc_file, sc_alpha, sc_beta, sc_tol, sc_max_iter, sc_json);
    }
    if (*sg) {
      ebb::EblOptions opt;
      opt.eps_abs = sg->count("--eps-abs") ? sg_eps_abs : env_or("EBB_EPS_ABS", sg_eps_abs);
      opt.eps_rel = sg->count("--eps-rel") ? sg_eps_rel : env_or("EBB_EPS_REL", sg_eps_rel);
      opt.node_budget = sg_budget;
      opt.local_budget = sg_local;
      opt.parallel_children = sg_parallel;
      return cmd_solve_global(sg_file, opt, sg_node_log, sg_json);
    }
    if (*be) return cmd_bench(be_suite, be_trials, be_dims, be_m, be_seed, be_threads, be_out);
    if (*ve) return cmd_verify(ve_file, ve_res, ve_json);
  } catch (const ebb::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ebb::NotPositiveDefinite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ebb::Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kUsage;
}
