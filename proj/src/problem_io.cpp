#include "ebb/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <utility>

namespace ebb::io {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

double require_number(const json& j, const char* what) {
  if (!j.is_number()) throw InvalidInput(std::string("problem file: ") + what + " must be a number");
  return j.get<double>();
}

Matrix matrix_from_json(const json& j, Index n, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw InvalidInput(std::string("problem file: ") + what + " must be an " +
                       std::to_string(n) + "-row array");
  }
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw InvalidInput(std::string("problem file: ") + what + " rows must have length " +
                         std::to_string(n));
    }
    for (Index k = 0; k < n; ++k) {
      m(i, k) = require_number(row[static_cast<std::size_t>(k)], what);
    }
  }
  return m;
}

// Symmetrize, recording the worst asymmetry for the caller to report.
linalg::SymMatrix sym_from_json(const json& j, Index n, const char* what, double& asym) {
  Matrix m = matrix_from_json(j, n, what);
  asym = std::max(asym, (m - m.transpose()).cwiseAbs().maxCoeff());
  return linalg::SymMatrix(m);
}

}  // namespace

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const json& j, Index expected) {
  if (!j.is_array()) throw InvalidInput("problem file: expected a numeric array");
  if (expected >= 0 && static_cast<Index>(j.size()) != expected) {
    throw InvalidInput("problem file: array must have length " + std::to_string(expected));
  }
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = require_number(j[static_cast<std::size_t>(i)], "vector entry");
  }
  return v;
}

json to_json(const ProblemFile& pf) {
  json j;
  j["schema"] = 1;
  j["n"] = pf.objective.b.size();
  j["m"] = pf.constraints.size();
  j["objective"] = {{"A", matrix_to_json(pf.objective.A.mat())},
                    {"b", vector_to_json(pf.objective.b)},
                    {"constant", pf.objective.constant}};
  json cons = json::array();
  for (const QuadraticForm& g : pf.constraints) {
    cons.push_back({{"A", matrix_to_json(g.A.mat())},
                    {"b", vector_to_json(g.b)},
                    {"c", g.c}});
  }
  j["constraints"] = std::move(cons);
  json meta;
  if (!pf.meta.kind.empty()) meta["kind"] = pf.meta.kind;
  if (!pf.meta.generator.empty()) meta["generator"] = pf.meta.generator;
  if (pf.meta.seed) meta["seed"] = *pf.meta.seed;
  if (pf.meta.neigs) meta["neigs"] = *pf.meta.neigs;
  if (!meta.empty()) j["meta"] = std::move(meta);
  return j;
}

ProblemFile problem_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("problem file: top level must be an object");
  if (!j.contains("schema") || !j["schema"].is_number_integer() || j["schema"].get<int>() != 1) {
    throw InvalidInput("problem file: unsupported or missing schema (expected 1)");
  }
  for (const char* key : {"n", "m", "objective", "constraints"}) {
    if (!j.contains(key)) {
      throw InvalidInput(std::string("problem file: missing field '") + key + "'");
    }
  }
  const Index n = j["n"].get<Index>();
  const std::size_t m = j["m"].get<std::size_t>();
  if (n < 1) throw InvalidInput("problem file: n must be >= 1");
  if (m < 1) throw InvalidInput("problem file: m must be >= 1");

  ProblemFile pf;
  const json& jo = j["objective"];
  if (!jo.is_object() || !jo.contains("A") || !jo.contains("b")) {
    throw InvalidInput("problem file: objective needs fields A and b");
  }
  pf.objective.A = sym_from_json(jo["A"], n, "objective.A", pf.max_asymmetry);
  pf.objective.b = vector_from_json(jo["b"], n);
  pf.objective.constant = jo.contains("constant") ? require_number(jo["constant"], "constant") : 0.0;

  const json& jc = j["constraints"];
  if (!jc.is_array() || jc.size() != m) {
    throw InvalidInput("problem file: constraints must be an array of length m");
  }
  pf.constraints.reserve(m);
  for (const json& g : jc) {
    if (!g.is_object() || !g.contains("A") || !g.contains("b") || !g.contains("c")) {
      throw InvalidInput("problem file: each constraint needs fields A, b, c");
    }
    QuadraticForm q{sym_from_json(g["A"], n, "constraint A", pf.max_asymmetry),
                    vector_from_json(g["b"], n), require_number(g["c"], "constraint c")};
    pf.constraints.push_back(std::move(q));
  }

  if (j.contains("meta") && j["meta"].is_object()) {
    const json& jm = j["meta"];
    if (jm.contains("kind") && jm["kind"].is_string()) pf.meta.kind = jm["kind"];
    if (jm.contains("generator") && jm["generator"].is_string()) {
      pf.meta.generator = jm["generator"];
    }
    if (jm.contains("seed") && jm["seed"].is_number_unsigned()) {
      pf.meta.seed = jm["seed"].get<std::uint64_t>();
    }
    if (jm.contains("neigs") && jm["neigs"].is_number_integer()) {
      pf.meta.neigs = jm["neigs"].get<int>();
    }
  }
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput("problem file " + path + ": " + e.what());
  }
  return problem_from_json(j);
}

void save_problem(const std::string& path, const ProblemFile& pf) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write problem file: " + path);
  out << to_json(pf).dump(2) << '\n';
  if (!out) throw Error("short write on problem file: " + path);
}

std::string to_string(ConvexTermination t) {
  switch (t) {
    case ConvexTermination::Converged: return "converged";
    case ConvexTermination::StepCollapse: return "step-collapse";
    case ConvexTermination::MaxIter: return "max-iter";
    case ConvexTermination::CutoffReached: return "cutoff";
  }
  return "unknown";
}

std::string to_string(GlobalTermination t) {
  switch (t) {
    case GlobalTermination::GapClosed: return "gap-closed";
    case GlobalTermination::NodeBudget: return "node-budget";
    case GlobalTermination::Degenerate: return "degenerate";
    case GlobalTermination::Infeasible: return "infeasible";
    case GlobalTermination::AmbiguousStart: return "ambiguous-start";
  }
  return "unknown";
}

json to_json(const ConvexSolveReport& rep) {
  json j;
  j["objective"] = rep.objective;
  j["kkt"] = rep.kkt;
  j["iterations"] = rep.iterations;
  j["termination"] = to_string(rep.termination);
  j["time_s"] = rep.time_s;
  j["solution"] = vector_to_json(rep.solution);
  j["multipliers"] = vector_to_json(rep.multipliers);
  json trace = json::array();
  for (const ConvexIterate& it : rep.trace) {
    trace.push_back({{"f", it.objective}, {"kkt", it.kkt}, {"tau", it.step}});
  }
  j["trace"] = std::move(trace);
  return j;
}

namespace {

// JSON has no inf/nan literals; the CLI output keeps them readable as strings.
json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

json to_json(const GlobalSolveReport& rep) {
  json j;
  j["value"] = finite_or_string(rep.value);
  j["lower_bound"] = rep.lb_trace.empty() ? finite_or_string(-std::numeric_limits<double>::infinity())
                                          : finite_or_string(rep.lb_trace.back());
  j["first_lower"] = finite_or_string(rep.first_lower);
  j["first_upper"] = finite_or_string(rep.first_upper);
  j["bisections"] = rep.bisections;
  j["nodes_explored"] = rep.nodes_explored;
  j["nodes_pruned"] = rep.nodes_pruned;
  j["termination"] = to_string(rep.termination);
  j["time_s"] = rep.time_s;
  j["incumbent"] = vector_to_json(rep.incumbent);
  json lbs = json::array(), ubs = json::array();
  for (double v : rep.lb_trace) lbs.push_back(finite_or_string(v));
  for (double v : rep.ub_trace) ubs.push_back(finite_or_string(v));
  j["lb_trace"] = std::move(lbs);
  j["ub_trace"] = std::move(ubs);
  if (!rep.node_log.empty()) {
    json nodes = json::array();
    for (const NodeDiagnostic& d : rep.node_log) {
      nodes.push_back({{"id", d.id},
                       {"parent", d.parent},
                       {"depth", d.depth},
                       {"lower_bound", finite_or_string(d.lower_bound)},
                       {"objective_at_y", finite_or_string(d.objective_at_y)},
                       {"dc_gap", d.dc_gap},
                       {"feasibility", std::string(1, d.feasibility)}});
    }
    j["node_log"] = std::move(nodes);
  }
  return j;
}

}  // namespace ebb::io
