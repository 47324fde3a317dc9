#pragma once

#include "ebb/bnb.hpp"
#include "ebb/convex.hpp"
#include "ebb/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ebb::io {

struct ProblemMeta {
  std::string kind;       // "convex", "psd", "indefinite", or free-form
  std::string generator;  // tool that produced the file
  std::optional<std::uint64_t> seed;
  std::optional<int> neigs;  // negative objective eigenvalues at generation time
};

// On-disk problem, schema 1:
// { "schema": 1, "n": ..., "m": ...,
//   "objective": {"A": [[...]], "b": [...], "constant": ...},
//   "constraints": [{"A": [[...]], "b": [...], "c": ...}, ...],
//   "meta": {...} }           (meta optional)
struct ProblemFile {
  Objective objective{linalg::SymMatrix::identity(1), Vector::Zero(1), 0.0};
  std::vector<QuadraticForm> constraints;
  ProblemMeta meta;
  double max_asymmetry = 0.0;  // largest |M_ij - M_ji| seen while loading
};

nlohmann::json to_json(const ProblemFile& pf);
ProblemFile problem_from_json(const nlohmann::json& j);

ProblemFile load_problem(const std::string& path);
void save_problem(const std::string& path, const ProblemFile& pf);

// Report serialization for the CLI.
std::string to_string(ConvexTermination t);
std::string to_string(GlobalTermination t);
nlohmann::json to_json(const ConvexSolveReport& rep);
nlohmann::json to_json(const GlobalSolveReport& rep);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j, Index expected = -1);

}  // namespace ebb::io
