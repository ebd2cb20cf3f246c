#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "drace/qclp.hpp"
#include "drace/verify.hpp"

using namespace drace;

TEST_CASE("maximize x subject to x <= 1") {
  QclpProblem p;
  p.start = Vec2::Zero();
  p.horizon = 1;
  p.u_max = 10.0;
  p.objective = {Vec2(1, 0)};
  p.planes = {HalfPlane{1, Vec2(1, 0), 1.0}};
  const QclpResult r = solve_qclp(p);
  REQUIRE(r.status == QclpStatus::ok);
  CHECK(r.positions[0].x() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.plane_multipliers[0] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("ball-constrained linear maximization") {
  QclpProblem p;
  p.start = Vec2::Zero();
  p.horizon = 1;
  p.u_max = 0.25;
  const Vec2 c = Vec2(0.6, -0.8);
  p.objective = {c};
  const QclpResult r = solve_qclp(p);
  REQUIRE(r.status == QclpStatus::ok);
  const Vec2 expected = p.u_max * c.normalized();
  CHECK((r.controls[0] - expected).norm() == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(r.objective == doctest::Approx(p.u_max * c.norm()));
}

TEST_CASE("random feasible instances match the grid oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    QclpProblem p;
    p.start = Vec2(u01(rng), u01(rng));
    p.horizon = 2;
    p.u_max = 0.2 + 0.3 * u01(rng);
    p.objective = {Vec2(2 * u01(rng) - 1, 2 * u01(rng) - 1),
                   Vec2(2 * u01(rng) - 1, 2 * u01(rng) - 1)};
    const int n_planes = 4 + static_cast<int>(u01(rng) * 4);
    for (int j = 0; j < n_planes; ++j) {
      HalfPlane hp;
      hp.k = 1 + static_cast<int>(u01(rng) * 2);
      const double th = 2 * M_PI * u01(rng);
      hp.a = Vec2(std::cos(th), std::sin(th));
      hp.b = hp.a.dot(p.start) + (0.3 + 1.2 * u01(rng)) * p.u_max;
      p.planes.push_back(hp);
    }
    const QclpResult r = solve_qclp(p);
    REQUIRE(r.status == QclpStatus::ok);
    CHECK(r.kkt_residual <= 1e-6);
    const verify::GridSolution oracle = verify::qclp_grid_oracle(p);
    REQUIRE(oracle.feasible);
    CHECK(r.objective == doctest::Approx(oracle.objective).epsilon(2e-3));
    CHECK(std::abs(r.objective - oracle.objective) <= 1e-3);
  }
}

TEST_CASE("multipliers predict the optimum shift of a relaxed plane") {
  // Sensitivity of the optimal value: relaxing an active half-plane by eps
  // increases the optimum by mu * eps.
  QclpProblem p;
  p.start = Vec2::Zero();
  p.horizon = 2;
  p.u_max = 0.5;
  p.objective = {Vec2(0.3, 0.1), Vec2(1.0, 0.2)};
  p.planes = {HalfPlane{2, Vec2(1, 0), 0.6}, HalfPlane{1, Vec2(0, 1), 0.2}};
  const QclpResult base = solve_qclp(p);
  REQUIRE(base.status == QclpStatus::ok);
  const double eps = 1e-5;
  for (size_t c = 0; c < p.planes.size(); ++c) {
    QclpProblem pp = p;
    pp.planes[c].b += eps;
    const QclpResult shifted = solve_qclp(pp);
    REQUIRE(shifted.status == QclpStatus::ok);
    const double predicted = base.plane_multipliers[c] * eps;
    CHECK(shifted.objective - base.objective == doctest::Approx(predicted).epsilon(0.05));
  }
}

TEST_CASE("infeasible hard instance reports failure") {
  QclpProblem p;
  p.start = Vec2::Zero();
  p.horizon = 1;
  p.u_max = 0.1;
  p.objective = {Vec2(1, 0)};
  // Requires x >= 1 within one 0.1-step: impossible.
  p.planes = {HalfPlane{1, Vec2(-1, 0), -1.0}};
  const QclpResult r = solve_qclp(p);
  CHECK(r.status == QclpStatus::failure);
}

TEST_CASE("soft planes yield the least-violation optimum when infeasible") {
  QclpProblem p;
  p.start = Vec2::Zero();
  p.horizon = 1;
  p.u_max = 0.1;
  p.objective = {Vec2(0.2, 0)};
  p.planes = {HalfPlane{1, Vec2(-1, 0), -1.0}};  // x >= 1, unreachable
  p.n_soft = 1;
  const QclpResult r = solve_qclp(p);
  REQUIRE(r.status == QclpStatus::ok);
  // Penalty dominates the objective, so the solution runs toward the plane.
  CHECK(r.positions[0].x() == doctest::Approx(0.1).epsilon(1e-4));
  CHECK(r.plane_multipliers[0] == doctest::Approx(p.soft_cap).epsilon(1e-6));
}

TEST_CASE("soft cap does not perturb feasible solutions") {
  QclpProblem p;
  p.start = Vec2::Zero();
  p.horizon = 2;
  p.u_max = 0.4;
  p.objective = {Vec2(0.4, -0.2), Vec2(0.9, 0.3)};
  p.planes = {HalfPlane{2, Vec2(1, 0), 0.5}, HalfPlane{1, Vec2(0, -1), 0.3}};
  QclpProblem soft = p;
  soft.n_soft = static_cast<int>(soft.planes.size());
  const QclpResult hard_r = solve_qclp(p);
  const QclpResult soft_r = solve_qclp(soft);
  REQUIRE(hard_r.status == QclpStatus::ok);
  REQUIRE(soft_r.status == QclpStatus::ok);
  CHECK(hard_r.objective == doctest::Approx(soft_r.objective).epsilon(1e-6));
  for (int k = 0; k < 2; ++k)
    CHECK((hard_r.controls[k] - soft_r.controls[k]).norm() <= 1e-5);
}

TEST_CASE("warm start at the optimum returns it unchanged") {
  QclpProblem p;
  p.start = Vec2(0.1, -0.2);
  p.horizon = 2;
  p.u_max = 0.3;
  p.objective = {Vec2(0.5, 0.5), Vec2(1.0, -0.1)};
  p.planes = {HalfPlane{2, Vec2(1, 0), 0.4}};
  const QclpResult first = solve_qclp(p);
  REQUIRE(first.status == QclpStatus::ok);
  QclpWarmStart warm;
  warm.u.resize(4);
  for (int k = 0; k < 2; ++k) warm.u.segment<2>(2 * k) = first.controls[k];
  warm.mu = first.plane_multipliers;
  const QclpResult second = solve_qclp(p, {}, &warm);
  REQUIRE(second.status == QclpStatus::ok);
  CHECK(second.iterations == 0);  // early exit on the entry KKT check
  for (int k = 0; k < 2; ++k) {
    CHECK(second.controls[k].x() == first.controls[k].x());
    CHECK(second.controls[k].y() == first.controls[k].y());
  }
}
