#include "drace/game_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drace {

namespace {

// A start that already violates the separation limit keeps its d_min: the
// exact-penalty collision constraints stay maximally violated at the start
// and push the plan back out, which is the recovery behavior we want.
// Shrinking d_min to the current separation instead lets prediction error
// ratchet the requirement down tick by tick.
bool separation_violated(const GameSnapshot& s) {
  const double sep = (s.own_start - s.opponent_start).norm();
  return sep < std::max(s.own_config.d_min, s.opponent_config.d_min);
}

SensitivityTerm build_sensitivity(const TrackModel& track, double alpha,
                                  const std::vector<double>& other_multipliers,
                                  const std::vector<Vec2>& other_new_positions,
                                  const std::vector<Vec2>& own_prev_positions) {
  SensitivityTerm sens;
  sens.alpha = alpha;
  if (alpha == 0.0 || other_multipliers.empty()) return sens;
  if (std::all_of(other_multipliers.begin(), other_multipliers.end(),
                  [](double m) { return m <= 0.0; }))
    return sens;
  const size_t n = std::min(other_new_positions.size(), own_prev_positions.size());
  sens.multipliers.assign(other_multipliers.begin(),
                          other_multipliers.begin() + std::min(other_multipliers.size(), n));
  sens.multipliers.resize(n, 0.0);
  sens.bearings.resize(n);
  for (size_t k = 0; k < n; ++k) {
    const Vec2 rel = other_new_positions[k] - own_prev_positions[k];
    if (rel.norm() < 1e-6) {
      sens.bearings[k] = project(track, own_prev_positions[k]).normal;
    } else {
      sens.bearings[k] = rel.normalized();
    }
  }
  return sens;
}

double strategy_change(const Strategy& a, const Strategy& b) {
  double c = 0.0;
  const size_t n = std::min(a.positions.size(), b.positions.size());
  for (size_t k = 0; k < n; ++k) {
    c = std::max(c, (a.positions[k] - b.positions[k]).cwiseAbs().maxCoeff());
    c = std::max(c, (a.controls[k] - b.controls[k]).cwiseAbs().maxCoeff());
  }
  return c;
}

SolveResult wrap_fixed_guess(const TrackModel& track, const Strategy& guess) {
  SolveResult r;
  r.strategy = guess;
  const int n = guess.horizon();
  r.collision_multipliers.assign(n, 0.0);
  r.collision_bearings.assign(n, Vec2::Zero());
  r.corridor_hi_multipliers.assign(n, 0.0);
  r.corridor_lo_multipliers.assign(n, 0.0);
  r.ball_multipliers.assign(n, 0.0);
  r.status = SolveStatus::converged;
  double hint = project(track, guess.start).tau;
  double gain = 0.0;
  for (const Vec2& p : guess.positions) {
    const double tau = project(track, p, hint).tau;
    gain += wrap_diff(tau - hint, track.total_length());
    hint = tau;
  }
  r.objective = gain;
  return r;
}

}  // namespace

Strategy initial_opponent_guess(const GameSnapshot& snapshot, const PlannerParams& params) {
  if (snapshot.previous_opponent &&
      snapshot.previous_opponent->strategy.horizon() == params.solver.horizon_steps)
    return snapshot.previous_opponent->strategy.shifted();
  return track_rollout(*snapshot.track, snapshot.opponent_start,
                       snapshot.opponent_config.v_max, params.solver.dt,
                       params.solver.horizon_steps);
}

PlanResult plan(const GameSnapshot& snapshot, const PlannerParams& params) {
  const TrackModel& track = *snapshot.track;
  const int n = params.solver.horizon_steps;
  const PlayerConfig& own_cfg = snapshot.own_config;
  const PlayerConfig& opp_cfg = snapshot.opponent_config;
  // Corridor recovery: when a start has drifted onto or past a wall, relax
  // that player's corridor by the violation so the plan can re-enter.
  SolverParams own_solver = params.solver;
  SolverParams opp_solver = params.solver;
  const double own_excess = corridor_excess(track, snapshot.own_start);
  const double opp_excess = corridor_excess(track, snapshot.opponent_start);
  if (own_excess > 0) own_solver.corridor_slack += own_excess + 1e-3;
  if (opp_excess > 0) opp_solver.corridor_slack += opp_excess + 1e-3;
  PlanResult out;
  out.recovered = separation_violated(snapshot) || own_excess > 0 || opp_excess > 0;

  const Strategy opp_guess =
      (snapshot.opponent_guess ? *snapshot.opponent_guess
                               : initial_opponent_guess(snapshot, params))
          .rebased(snapshot.opponent_start);
  SolveResult opp_res = wrap_fixed_guess(track, opp_guess);
  if (snapshot.previous_opponent &&
      snapshot.previous_opponent->strategy.horizon() == n) {
    // Carry the shifted dual variables of the previous prediction as well.
    SolveResult prev = snapshot.previous_opponent->shifted();
    prev.strategy = opp_guess;
    prev.collision_multipliers.assign(n, 0.0);  // the guess carries no reaction term
    opp_res = std::move(prev);
  }

  std::optional<SolveResult> own_warm;
  if (snapshot.previous_own && snapshot.previous_own->strategy.horizon() == n)
    own_warm = snapshot.previous_own->shifted();

  SolveResult own_res;
  const SolveResult* own_warm_ptr = own_warm ? &*own_warm : nullptr;
  bool have_own = own_warm.has_value();
  Strategy own_latest = own_warm ? own_warm->strategy.rebased(snapshot.own_start)
                                 : Strategy::stationary(snapshot.own_start, params.solver.dt, n);
  Strategy opp_latest = opp_res.strategy;

  double change = std::numeric_limits<double>::infinity();
  const int max_l = std::max(1, params.ibr_iterations);
  for (int l = 1; l <= max_l; ++l) {
    const Strategy own_before = own_latest;
    const Strategy opp_before = opp_latest;

    // Solve for self against the opponent's latest strategy.
    SensitivityTerm sens_self =
        have_own ? build_sensitivity(track, params.alpha, opp_res.collision_multipliers,
                                     opp_latest.positions, own_latest.positions)
                 : SensitivityTerm{};
    own_res = best_response(track, own_cfg, snapshot.own_start, opp_latest.positions,
                            sens_self, own_solver, own_warm_ptr,
                            &snapshot.opponent_start);
    own_latest = own_res.strategy;
    own_warm_ptr = &own_res;
    have_own = true;

    // Solve for the opponent against the new self strategy.
    if (!params.fixed_opponent) {
      SensitivityTerm sens_opp =
          build_sensitivity(track, params.alpha, own_res.collision_multipliers,
                            own_latest.positions, opp_latest.positions);
      opp_res = best_response(track, opp_cfg, snapshot.opponent_start, own_latest.positions,
                              sens_opp, opp_solver, &opp_res, &snapshot.own_start);
      opp_latest = opp_res.strategy;
    }

    out.iterations = l;
    if (l >= 2) {
      change = std::max(strategy_change(own_latest, own_before),
                        strategy_change(opp_latest, opp_before));
      out.last_change = change;
      if (change <= 1e-9) break;  // fixed point; further alternations are no-ops
    }
  }
  out.converged = change <= params.convergence_tol;

  // Extra resolution of the ego problem against the final opponent strategy.
  SensitivityTerm sens_final =
      build_sensitivity(track, params.alpha, opp_res.collision_multipliers,
                        opp_latest.positions, own_latest.positions);
  own_res = best_response(track, own_cfg, snapshot.own_start, opp_latest.positions, sens_final,
                          own_solver, own_warm_ptr, &snapshot.opponent_start);

  out.own = own_res;
  out.predicted_opponent = opp_res;
  return out;
}

namespace {

// Residual of one player's first-order conditions with adjusted multipliers,
// using the true nonlinear gradients at the returned strategies.
double player_kkt_residual(const TrackModel& track, const SolveResult& self,
                           const SolveResult& other, const PlayerConfig& cfg, double alpha) {
  const Strategy& sigma = self.strategy;
  const int n = sigma.horizon();
  const double u_max = cfg.v_max * sigma.dt;
  const double w = track.half_width();
  double res = 0.0;

  std::vector<Vec2> frames_n(n);
  std::vector<double> corridor_e(n);
  double hint = project(track, sigma.start).tau;
  for (int k = 0; k < n; ++k) {
    const TrackFrame f = project(track, sigma.positions[k], hint);
    hint = f.tau;
    frames_n[k] = f.normal;
    corridor_e[k] = f.normal.dot(sigma.positions[k] - f.point);
  }
  const Eigen::RowVector2d sigma_row = progress_sensitivity(track, sigma.positions[n - 1], hint);

  std::vector<Vec2> grad(n, Vec2::Zero());
  grad[n - 1] += sigma_row.transpose();

  for (int k = 0; k < n; ++k) {
    const Vec2 rel = other.strategy.positions[k] - sigma.positions[k];
    const double dist = rel.norm();
    const double c = cfg.d_min - dist;
    const double lam_self = k < static_cast<int>(self.collision_multipliers.size())
                                ? self.collision_multipliers[k]
                                : 0.0;
    const double lam_other = k < static_cast<int>(other.collision_multipliers.size())
                                 ? other.collision_multipliers[k]
                                 : 0.0;
    const double lam_star = lam_self - alpha * lam_other;
    res = std::max(res, std::max(0.0, -lam_star));  // adjusted multiplier nonnegativity
    res = std::max(res, std::max(0.0, c));          // primal feasibility
    res = std::max(res, std::abs(lam_star * c));    // complementary slackness
    if (dist > 1e-12) grad[k] -= lam_star * (rel / dist);

    const double hi = corridor_e[k] - w;
    const double lo = -corridor_e[k] - w;
    res = std::max({res, std::max(0.0, hi), std::max(0.0, lo)});
    res = std::max(res, std::abs(self.corridor_hi_multipliers[k] * hi));
    res = std::max(res, std::abs(self.corridor_lo_multipliers[k] * lo));
    grad[k] -= self.corridor_hi_multipliers[k] * frames_n[k];
    grad[k] += self.corridor_lo_multipliers[k] * frames_n[k];
  }

  // Reduced stationarity over controls, absorbing the ball normals.
  Vec2 suffix = Vec2::Zero();
  for (int r = n - 1; r >= 0; --r) {
    suffix += grad[r];
    const Vec2 u = sigma.controls[r];
    const double un = u.norm();
    const double ball = un - u_max;
    const double nu = self.ball_multipliers[r];
    res = std::max(res, std::max(0.0, ball));
    res = std::max(res, std::abs(nu * ball));
    if (un >= u_max * (1.0 - 1e-9) && un > 0) {
      res = std::max(res, (suffix - nu * (u / un)).cwiseAbs().maxCoeff());
    } else {
      res = std::max(res, suffix.cwiseAbs().maxCoeff());
    }
  }
  return res;
}

}  // namespace

double nash_kkt_residual(const PlanResult& result, const GameSnapshot& snapshot,
                         const PlannerParams& params) {
  const double a = params.alpha;
  return std::max(player_kkt_residual(*snapshot.track, result.own, result.predicted_opponent,
                                      snapshot.own_config, a),
                  player_kkt_residual(*snapshot.track, result.predicted_opponent, result.own,
                                      snapshot.opponent_config, a));
}

}  // namespace drace
