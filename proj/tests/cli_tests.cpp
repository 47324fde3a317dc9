#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ebb/probgen.hpp"
#include "ebb/problem_io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One scratch directory for the whole binary; the last test case removes it.
const std::string& work_dir() {
  static const std::string dir = [] {
    char tmpl[] = "/tmp/ebb_cli_XXXXXX";
    const char* d = mkdtemp(tmpl);
    return d ? std::string(d) : std::string();
  }();
  REQUIRE(!dir.empty());
  return dir;
}

std::string path_in(const std::string& name) { return work_dir() + "/" + name; }

int run(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd = env_prefix + std::string(EBB_CLI_PATH) + " " + args +
                          " >" + path_in("stdout.txt") + " 2>" + path_in("stderr.txt");
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_file(const std::string& path) { return json::parse(slurp(path)); }

// Later cases reuse the generated convex file; regenerate if filtered runs
// skipped the first case.
void ensure_problem() {
  if (!fs::exists(path_in("p.json"))) {
    REQUIRE(run("gen --kind convex --n 3 --m 2 --seed 7 --out " + path_in("p.json")) == 0);
  }
}

}  // namespace

TEST_CASE("cli: gen writes a loadable problem file, byte-stable") {
  REQUIRE(run("gen --kind convex --n 3 --m 2 --seed 7 --out " + path_in("p.json")) == 0);
  ebb::io::ProblemFile pf = ebb::io::load_problem(path_in("p.json"));
  CHECK(pf.meta.kind == "convex");
  CHECK(pf.objective.b.size() == 3);
  CHECK(pf.constraints.size() == 2);
  REQUIRE(pf.meta.seed.has_value());
  CHECK(*pf.meta.seed == 7);

  REQUIRE(run("gen --kind convex --n 3 --m 2 --seed 7 --out " + path_in("p2.json")) == 0);
  CHECK(slurp(path_in("p.json")) == slurp(path_in("p2.json")));

  // Stdout emission parses as well.
  REQUIRE(run("gen --kind psd --n 2 --m 1 --seed 3 --out -") == 0);
  json j = parse_file(path_in("stdout.txt"));
  CHECK(j["meta"]["kind"] == "psd");
}

TEST_CASE("cli: solve-convex produces a converged report") {
  ensure_problem();
  REQUIRE(run("solve-convex --file " + path_in("p.json") + " --json-out " +
              path_in("r.json")) == 0);
  json r = parse_file(path_in("r.json"));
  CHECK(r["termination"] == "converged");
  CHECK(r["objective"].is_number());
  CHECK(r["iterations"].is_number_integer());
  CHECK(r["solution"].size() == 3);
}

TEST_CASE("cli: solve-global closes the gap on a small indefinite file") {
  // Pick a seed whose draw really is indefinite so the run exercises bisection.
  std::uint64_t seed = 1;
  while (ebb::probgen::gen_indefinite(2, 2, seed).negative_eigenvalues < 1) ++seed;
  REQUIRE(run("gen --kind indefinite --n 2 --m 2 --seed " + std::to_string(seed) +
              " --out " + path_in("ind.json")) == 0);

  REQUIRE(run("solve-global --file " + path_in("ind.json") + " --node-log --json-out " +
              path_in("g.json")) == 0);
  json g = parse_file(path_in("g.json"));
  CHECK(g["termination"] == "gap-closed");
  CHECK(g["value"].is_number());
  CHECK(g["lb_trace"].size() == g["ub_trace"].size());
  CHECK(g.contains("node_log"));

  // The convex front end must reject the indefinite objective as input.
  CHECK(run("solve-convex --file " + path_in("ind.json")) == 4);
}

TEST_CASE("cli: verify agrees with the solver on a desk-size instance") {
  ensure_problem();
  REQUIRE(run("verify --file " + path_in("p.json") + " --resolution 60 --json-out " +
              path_in("v.json")) == 0);
  json v = parse_file(path_in("v.json"));
  CHECK(v["agreement"] == "compared");
  CHECK(v["oracle_found_feasible"] == true);
}

TEST_CASE("cli: infeasible input maps to exit code 2") {
  ebb::io::ProblemFile pf;
  pf.objective = ebb::Objective{ebb::linalg::SymMatrix::identity(2),
                                ebb::Vector::Zero(2), 0.0};
  ebb::Vector c2(2);
  c2 << 5.0, 0.0;
  pf.constraints = {
      ebb::QuadraticForm{ebb::linalg::SymMatrix::identity(2), ebb::Vector::Zero(2), -1.0},
      ebb::QuadraticForm{ebb::linalg::SymMatrix::identity(2), -2.0 * c2,
                         c2.squaredNorm() - 1.0}};
  ebb::io::save_problem(path_in("empty.json"), pf);

  CHECK(run("solve-convex --file " + path_in("empty.json")) == 2);
  CHECK(run("solve-global --file " + path_in("empty.json")) == 2);
  CHECK(run("verify --file " + path_in("empty.json") + " --resolution 40") == 2);
}

TEST_CASE("cli: bench emits the CSV schema") {
  REQUIRE(run("bench --suite table2 --trials 2 --dims 2 --m 2 --out " +
              path_in("t2.csv")) == 0);
  std::string csv = slurp(path_in("t2.csv"));
  CHECK(csv.rfind("suite,row,n,m,trial,seed,time_s,iter,pg_err,success,objective\n", 0) ==
        0);

  REQUIRE(run("bench --suite table4 --trials 1 --dims 2 --out " + path_in("t4.csv")) == 0);
  CHECK(slurp(path_in("t4.csv"))
            .rfind("suite,row,n,m,trial,seed,neigs,lb1,ub1,val,it,time_s,termination\n",
                   0) == 0);
}

TEST_CASE("cli: usage errors map to exit code 4") {
  ensure_problem();
  CHECK(run("gen --kind convex --n 0 --m 2") == 4);
  CHECK(run("gen --kind convex --n 2 --m 2 --bogus") == 4);
  CHECK(run("solve-convex") == 4);
  CHECK(run("bench --suite table9") == 4);
  CHECK(run("verify --file " + path_in("missing.json")) == 4);
  CHECK(run("solve-convex --file " + path_in("p.json"), "EBB_TOL_KKT=abc ") == 4);

  // n = 7 is over the oracle's refusal threshold.
  REQUIRE(run("gen --kind convex --n 7 --m 2 --seed 1 --out " + path_in("p7.json")) == 0);
  CHECK(run("verify --file " + path_in("p7.json")) == 4);
}

TEST_CASE("cli: scratch cleanup") {
  std::error_code ec;
  fs::remove_all(work_dir(), ec);
  CHECK(!ec);
}
