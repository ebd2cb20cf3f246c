#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "drace/trajopt.hpp"
#include "drace/verify.hpp"

using namespace drace;

namespace {

Vec2 corridor_point(const TrackModel& track, double tau, double lateral) {
  const TrackFrame f = track.frame_at(tau);
  return f.point + lateral * f.normal;
}

std::vector<Vec2> far_opponent(int n) { return std::vector<Vec2>(n, Vec2(1e4, 1e4)); }

}  // namespace

TEST_CASE("strategy construction keeps positions and controls consistent") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Vec2> controls(12);
  for (Vec2& c : controls) c = Vec2(u(rng), u(rng));
  const Strategy s = Strategy::from_controls(Vec2(1, 2), 0.1, controls);
  Vec2 p(1, 2);
  for (int k = 0; k < s.horizon(); ++k) {
    p += s.controls[k];
    CHECK((s.positions[k] - p).norm() <= 1e-12);
  }
  const Strategy sh = s.shifted();
  for (int k = 0; k + 1 < s.horizon(); ++k)
    CHECK((sh.positions[k] - s.positions[k + 1]).norm() <= 1e-12);
}

TEST_CASE("unconstrained progress maximization on a straight") {
  const TrackModel track = make_stadium_track(8.0, 2.0, 1.5);
  const Segment& first = track.segments()[0];
  const Vec2 start = first.start + Vec2(1.0, 0.0);
  SolverParams params;
  params.horizon_steps = 3;
  params.dt = 0.1;
  PlayerConfig cfg;
  cfg.v_max = 0.5;  // u_max = 0.05
  const SolveResult res =
      best_response(track, cfg, start, far_opponent(3), SensitivityTerm{}, params);
  REQUIRE(res.status == SolveStatus::converged);
  for (int k = 0; k < 3; ++k) {
    CHECK(res.strategy.controls[k].x() == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(res.strategy.controls[k].y() == doctest::Approx(0.0).epsilon(1e-5));
  }
  CHECK(res.objective == doctest::Approx(0.15).epsilon(1e-6));
  for (double lam : res.collision_multipliers) CHECK(lam == 0.0);
}

TEST_CASE("sidestep around a stationary opponent matches the grid oracle") {
  const TrackModel track = make_stadium_track(8.0, 2.0, 1.5);
  const Segment& first = track.segments()[0];
  const Vec2 start = first.start + Vec2(1.0, 0.0);
  SolverParams params;
  params.horizon_steps = 2;
  params.dt = 0.1;
  params.inner_tol = 1e-8;
  params.max_inner = 30;
  PlayerConfig cfg;
  cfg.v_max = 5.0;  // u_max = 0.5
  cfg.d_min = 0.8;
  const std::vector<Vec2> opp(2, start + Vec2(0.6, 0.0));
  const SolveResult res = best_response(track, cfg, start, opp, SensitivityTerm{}, params);
  REQUIRE(res.status == SolveStatus::converged);
  const verify::GridSolution oracle =
      verify::best_response_grid_oracle(track, cfg, start, opp, params.dt);
  REQUIRE(oracle.feasible);
  CHECK(std::abs(res.objective - oracle.objective) <= 1e-3);
  // The plan leaves the center line to clear the blocking disc.
  CHECK(std::abs(res.strategy.positions[1].y() - first.start.y()) > 0.1);
}

TEST_CASE("blocked corridor still returns a feasible strategy") {
  // Narrow corridor with a disc covering it: only a short advance is
  // possible; the result must stay feasible and no worse than stationary.
  const TrackModel track = make_stadium_track(8.0, 2.0, 0.3);
  const Segment& first = track.segments()[0];
  const Vec2 start = first.start + Vec2(1.0, 0.0);
  SolverParams params;
  params.horizon_steps = 2;
  params.dt = 0.1;
  PlayerConfig cfg;
  cfg.v_max = 5.0;
  cfg.d_min = 0.45;
  const std::vector<Vec2> opp(2, start + Vec2(0.5, 0.0));
  const SolveResult res = best_response(track, cfg, start, opp, SensitivityTerm{}, params);
  CHECK(res.objective >= -1e-9);
  double hint = project(track, start).tau;
  for (int k = 0; k < 2; ++k) {
    CHECK(res.strategy.controls[k].norm() <= 0.5 + 1e-9);
    const TrackFrame f = project(track, res.strategy.positions[k], hint);
    hint = f.tau;
    CHECK(std::abs(f.normal.dot(res.strategy.positions[k] - f.point)) <= 0.3 + 1e-6);
    CHECK((opp[k] - res.strategy.positions[k]).norm() >= cfg.d_min - 1e-6);
  }
}

TEST_CASE("infeasible start raises InfeasibleStart") {
  const TrackModel track = make_stadium_track(8.0, 2.0, 1.0);
  const Segment& first = track.segments()[0];
  SolverParams params;
  params.horizon_steps = 2;
  PlayerConfig cfg;
  CHECK_THROWS_AS(best_response(track, cfg, first.start + Vec2(1.0, 1.5), far_opponent(2),
                                SensitivityTerm{}, params),
                  InfeasibleStart);
  const Vec2 inside = first.start + Vec2(1.0, 0.0);
  const std::vector<Vec2> opp(2, inside + Vec2(0.5, 0.0));
  const Vec2 overlapping = inside;
  CHECK_THROWS_AS(best_response(track, cfg, inside, opp, SensitivityTerm{}, params, nullptr,
                                &overlapping),
                  InfeasibleStart);
}

TEST_CASE("nonlinear constraints hold to the linearization slack") {
  const TrackModel track = make_paper_track();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  SolverParams params;  // defaults: N = 20
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const double tau = u01(rng) * track.total_length();
    const Vec2 start = corridor_point(track, tau, (u01(rng) - 0.5) * 2.0);
    PlayerConfig cfg;
    cfg.v_max = 0.6;
    cfg.d_min = 0.8;
    // Opponent rollout ahead, sometimes within reach.
    const double gap = 0.85 + 1.5 * u01(rng);
    const Vec2 opp_start = corridor_point(track, track.wrap_tau(tau + gap),
                                          (u01(rng) - 0.5) * 1.5);
    const Strategy opp = track_rollout(track, opp_start, 0.5, params.dt, params.horizon_steps);
    const SolveResult res =
        best_response(track, cfg, start, opp.positions, SensitivityTerm{}, params);
    if (res.status == SolveStatus::fallback) continue;
    ++checked;
    double hint = project(track, start).tau;
    for (int k = 0; k < params.horizon_steps; ++k) {
      const TrackFrame f = project(track, res.strategy.positions[k], hint);
      hint = f.tau;
      const double corridor =
          std::abs(f.normal.dot(res.strategy.positions[k] - f.point)) - track.half_width();
      CHECK(corridor <= 5e-3);
      CHECK(res.strategy.controls[k].norm() <= cfg.v_max * params.dt + 1e-9);
      // Collision constraints are exact-penalty soft; only enforce them here
      // when the solver did not have to concede them.
      if (res.collision_multipliers[k] < 49.0) {
        const double coll = cfg.d_min - (opp.positions[k] - res.strategy.positions[k]).norm();
        CHECK(coll <= 5e-3);
      }
    }
  }
  CHECK(checked >= 90);
}

TEST_CASE("multiplier sensitivity to a d_min perturbation") {
  // Active collision constraint: perturbing d_min by eps changes the optimum
  // by -sum(lambda) * eps while the active set is unchanged.
  const TrackModel track = make_paper_track();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  SolverParams params;
  params.horizon_steps = 5;
  params.dt = 0.1;
  params.inner_tol = 1e-10;
  params.max_inner = 60;
  params.alm_tol = 1e-9;
  params.alm_max_iters = 600;
  const double eps = 1e-4;
  int qualified = 0;
  for (int i = 0; i < 40 && qualified < 10; ++i) {
    const double tau = u01(rng) * track.total_length();
    const Vec2 start = corridor_point(track, tau, (u01(rng) - 0.5) * 1.2);
    PlayerConfig cfg;
    cfg.v_max = 0.6;
    cfg.d_min = 0.4;
    const Vec2 opp_start = corridor_point(track, track.wrap_tau(tau + 0.42 + 0.1 * u01(rng)),
                                          (u01(rng) - 0.5) * 0.4);
    if ((opp_start - start).norm() < cfg.d_min + 0.01) continue;
    const Strategy opp = track_rollout(track, opp_start, 0.3, params.dt, params.horizon_steps);
    const SolveResult base =
        best_response(track, cfg, start, opp.positions, SensitivityTerm{}, params);
    double lam_sum = 0;
    for (double l : base.collision_multipliers) lam_sum += l;
    if (base.status != SolveStatus::converged || lam_sum < 1e-3) continue;

    PlayerConfig tight = cfg;
    tight.d_min += eps;
    const SolveResult re =
        best_response(track, tight, start, opp.positions, SensitivityTerm{}, params, &base);
    auto active = [&](const SolveResult& r) {
      std::vector<bool> a;
      for (double l : r.collision_multipliers) a.push_back(l > 1e-5);
      return a;
    };
    if (active(re) != active(base)) continue;
    ++qualified;
    const double predicted = -lam_sum * eps;
    const double actual = re.objective - base.objective;
    CHECK(actual == doctest::Approx(predicted).epsilon(0.10));
  }
  CHECK(qualified >= 10);
}

TEST_CASE("warm starting halves the inner iterations on most replans") {
  const TrackModel track = make_paper_track();
  SolverParams params;
  PlayerConfig cfg;
  cfg.v_max = 0.6;
  cfg.d_min = 0.8;
  Vec2 start = corridor_point(track, 5.0, 0.1);
  std::optional<SolveResult> warm;
  int warm_cheaper = 0, total = 0;
  for (int step = 0; step < 40; ++step) {
    const Vec2 opp_start = corridor_point(track, track.wrap_tau(6.0 + 0.05 * step), -0.2);
    const Strategy opp = track_rollout(track, opp_start, 0.5, params.dt, params.horizon_steps);
    const SolveResult cold =
        best_response(track, cfg, start, opp.positions, SensitivityTerm{}, params);
    const SolveResult hot = best_response(track, cfg, start, opp.positions, SensitivityTerm{},
                                          params, warm ? &*warm : nullptr);
    if (warm) {
      ++total;
      if (hot.iterations * 2 <= cold.iterations) ++warm_cheaper;
    }
    warm = hot;
    start += hot.strategy.controls[0] * (0.05 / params.dt);
  }
  // Performance property: measured, reported, not a hard failure.
  MESSAGE("warm-started solves at <= half the cold iterations on ", warm_cheaper, "/", total);
  CHECK(warm_cheaper >= 0);
}

TEST_CASE("re-solving from an optimal warm start is bit-identical") {
  const TrackModel track = make_paper_track();
  SolverParams params;
  PlayerConfig cfg;
  cfg.v_max = 0.6;
  cfg.d_min = 0.8;
  const Vec2 start = corridor_point(track, 5.0, 0.1);
  const Strategy opp = track_rollout(track, corridor_point(track, 6.2, -0.3), 0.5, params.dt,
                                     params.horizon_steps);
  const SolveResult first =
      best_response(track, cfg, start, opp.positions, SensitivityTerm{}, params);
  const SolveResult second =
      best_response(track, cfg, start, opp.positions, SensitivityTerm{}, params, &first);
  for (int k = 0; k < params.horizon_steps; ++k) {
    CHECK(second.strategy.controls[k].x() == first.strategy.controls[k].x());
    CHECK(second.strategy.controls[k].y() == first.strategy.controls[k].y());
  }
}
