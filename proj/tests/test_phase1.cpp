#include "ebb/phase1.hpp"

#include <doctest.h>

#include "ebb/ellipsoid.hpp"
#include "ebb/probgen.hpp"
#include "test_util.hpp"

#include <cmath>
#include <vector>

using namespace ebb;
using phase1::FeasibilityStatus;

namespace {

// g(x) = ||x - c||^2 - r^2 <= 0
QuadraticForm ball(const Vector& c, double r) {
  return QuadraticForm{linalg::SymMatrix::identity(c.size()), -2.0 * c,
                       c.squaredNorm() - r * r};
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

bool strictly_inside(const std::vector<QuadraticForm>& gs, const Vector& x) {
  for (const auto& g : gs) {
    if (g.value(x) > -1e-8 * (1.0 + std::abs(g.c))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("find_feasible: overlapping balls yield a strict interior point") {
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0), ball(vec2(1.5, 0), 1.0)};
  phase1::Phase1Result res = phase1::find_feasible(gs);
  REQUIRE(res.status == FeasibilityStatus::Feasible);
  CHECK(strictly_inside(gs, res.point));
  // The lens around (0.75, 0) is the only overlap.
  CHECK(res.point[0] > 0.4);
  CHECK(res.point[0] < 1.1);
  CHECK(res.inner_iterations > 0);
}

TEST_CASE("find_feasible: separated balls are certified infeasible at stage 2") {
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0), ball(vec2(3, 0), 1.0)};
  phase1::Phase1Result res = phase1::find_feasible(gs);
  CHECK(res.status == FeasibilityStatus::Infeasible);
  CHECK(res.stage == 1);  // second constraint's stage minimum is 3 > 0
}

TEST_CASE("find_feasible: single constraint returns its center immediately") {
  std::vector<QuadraticForm> gs{ball(vec2(0.5, -2), 2.0)};
  phase1::Phase1Result res = phase1::find_feasible(gs);
  REQUIRE(res.status == FeasibilityStatus::Feasible);
  CHECK(res.inner_iterations == 0);
  CHECK((res.point - vec2(0.5, -2)).norm() < 1e-12);
  CHECK(gs[0].value(res.point) == doctest::Approx(-4.0));
}

TEST_CASE("find_feasible: tangent balls are ambiguous, not misclassified") {
  // Intersection is the single point (1, 0); no strict interior exists.
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0), ball(vec2(2, 0), 1.0)};
  phase1::Phase1Result res = phase1::find_feasible(gs);
  CHECK(res.status == FeasibilityStatus::Ambiguous);
  CHECK(res.stage == 1);
}

TEST_CASE("find_feasible: three constraints chaining stages") {
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 2.0), ball(vec2(1.5, 0), 1.0),
                                ball(vec2(0.8, 0.4), 1.2)};
  phase1::Phase1Result res = phase1::find_feasible(gs);
  REQUIRE(res.status == FeasibilityStatus::Feasible);
  CHECK(strictly_inside(gs, res.point));
}

TEST_CASE("find_feasible: generated convex instances always admit a point") {
  for (std::uint64_t seed : {5ull, 17ull, 260ull}) {
    probgen::GeneratedProblem gp = probgen::gen_convex(4, 3, seed);
    phase1::Phase1Result res = phase1::find_feasible(gp.constraints);
    REQUIRE(res.status == FeasibilityStatus::Feasible);
    CHECK(strictly_inside(gp.constraints, res.point));
  }
}

TEST_CASE("find_feasible: input validation") {
  CHECK_THROWS_AS(phase1::find_feasible({}), InvalidInput);
  // Not SPD: hyperbola-shaped quadratic.
  Matrix hm(2, 2);
  hm << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(
      phase1::find_feasible({QuadraticForm{linalg::SymMatrix(hm), Vector::Zero(2), -1.0}}),
      InvalidInput);
  // Dimension mismatch between constraints.
  Vector c3 = Vector::Zero(3);
  CHECK_THROWS_AS(phase1::find_feasible({ball(vec2(0, 0), 1.0), ball(c3, 1.0)}),
                  InvalidInput);
}

TEST_CASE("find_feasible_in: x0 already inside E short-circuits") {
  Ellipsoid e = Ellipsoid::from_quadratic(linalg::SymMatrix::identity(2),
                                          Vector::Zero(2), 4.0);
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0)};
  Vector x0 = vec2(0.5, 0);
  phase1::Phase1Result res = phase1::find_feasible_in(e, gs, x0);
  REQUIRE(res.status == FeasibilityStatus::Feasible);
  CHECK((res.point - x0).norm() == 0.0);
  CHECK(res.inner_iterations == 0);
}

TEST_CASE("find_feasible_in: overlap found via center projection") {
  // E is the ball of radius 1 at (1.5, 0); Omega is the unit ball. x0 = 0 is
  // outside E, but projecting E's center onto Omega lands at (1, 0) inside E.
  Ellipsoid e = Ellipsoid::from_center(vec2(1.5, 0), linalg::SymMatrix::identity(2));
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0)};
  phase1::Phase1Result res = phase1::find_feasible_in(e, gs, Vector::Zero(2));
  REQUIRE(res.status == FeasibilityStatus::Feasible);
  CHECK(e.contains(res.point).slack <= e.membership_tol());
  for (const auto& g : gs) CHECK(g.value(res.point) <= g.feas_tol());
}

TEST_CASE("find_feasible_in: distant ellipsoid certified infeasible") {
  Ellipsoid e = Ellipsoid::from_center(vec2(10, 0), linalg::SymMatrix::identity(2));
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0)};
  phase1::Phase1Result res = phase1::find_feasible_in(e, gs, Vector::Zero(2));
  CHECK(res.status == FeasibilityStatus::Infeasible);
}

TEST_CASE("find_feasible_in: x0 must satisfy the constraints") {
  Ellipsoid e = Ellipsoid::from_quadratic(linalg::SymMatrix::identity(2),
                                          Vector::Zero(2), 9.0);
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0)};
  CHECK_THROWS_AS(phase1::find_feasible_in(e, gs, vec2(5, 0)), InvalidStart);
}

TEST_CASE("find_feasible_in: both bisection children of a cover stay feasible") {
  // E0 = ball radius 3 covers the unit-ball feasible set; cutting across any
  // direction leaves a nonempty intersection on each side.
  Ellipsoid e0 = Ellipsoid::from_quadratic(linalg::SymMatrix::identity(2),
                                           Vector::Zero(2), 9.0);
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0)};
  Bisection cut = bisect(e0, vec2(1, 0));
  REQUIRE(cut.status == BisectStatus::Ok);
  int feasible_children = 0;
  for (const Ellipsoid* child : {&*cut.plus, &*cut.minus}) {
    phase1::Phase1Result res = phase1::find_feasible_in(*child, gs, Vector::Zero(2));
    if (res.status == FeasibilityStatus::Feasible) {
      ++feasible_children;
      for (const auto& g : gs) CHECK(g.value(res.point) <= g.feas_tol());
    }
  }
  CHECK(feasible_children >= 1);
}

TEST_CASE("find_feasible_in: off-center slab E meeting the ball") {
  // Needs the certificate solve (center projection lands outside E).
  Matrix q(2, 2);
  q << 2.0, 0.3, 0.3, 0.5;
  Ellipsoid e = Ellipsoid::from_center(vec2(1.2, 0.9), linalg::SymMatrix(q));
  std::vector<QuadraticForm> gs{ball(vec2(0, 0), 1.0), ball(vec2(0.5, 0.5), 1.0)};
  Vector x0 = vec2(0.2, 0.2);
  phase1::Phase1Result res = phase1::find_feasible_in(e, gs, x0);
  if (res.status == FeasibilityStatus::Feasible) {
    CHECK(e.contains(res.point).slack <= e.membership_tol());
    for (const auto& g : gs) CHECK(g.value(res.point) <= g.feas_tol());
  } else {
    // Must not be Infeasible: (0.74, 0.67) lies in E and in both balls.
    Vector w = vec2(0.74, 0.67);
    REQUIRE(e.contains(w).inside);
    for (const auto& g : gs) REQUIRE(g.value(w) <= 0.0);
    CHECK(res.status != FeasibilityStatus::Infeasible);
  }
}
