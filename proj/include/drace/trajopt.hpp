#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "drace/qclp.hpp"
#include "drace/track.hpp"

namespace drace {

struct InfeasibleStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One player's decision variable: N positions and the N piecewise-constant
/// controls (per-step displacements) that generate them from the start point.
struct Strategy {
  Vec2 start = Vec2::Zero();
  double dt = 0.1;
  std::vector<Vec2> positions;
  std::vector<Vec2> controls;

  int horizon() const { return static_cast<int>(controls.size()); }
  const Vec2& position(int k) const { return k == 0 ? start : positions[k - 1]; }

  static Strategy stationary(const Vec2& start, double dt, int horizon);
  static Strategy from_controls(const Vec2& start, double dt, std::vector<Vec2> controls);
  /// Receding-horizon shift: drop the first step, repeat the last control.
  Strategy shifted() const;
  /// Same controls from a new start point.
  Strategy rebased(const Vec2& new_start) const;
};

struct PlayerConfig {
  double v_max = 0.6;            // m/s
  double d_min = 0.8;            // m, minimum separation
  double fov_half_angle = M_PI / 4.0;  // rad
  double radius = 0.3;           // m, body radius (simulator only)
};

/// Opponent-reaction term added to the objective: alpha * sum_k lambda_k *
/// bearing_k . p_k, built from the multipliers of the opponent's last solve.
struct SensitivityTerm {
  double alpha = 0.0;
  std::vector<double> multipliers;
  std::vector<Vec2> bearings;

  bool empty() const { return alpha == 0.0 || multipliers.empty(); }
};

struct SolverParams {
  int horizon_steps = 20;
  double dt = 0.2;         // s
  double inner_tol = 1e-4;  // sequential-iteration residual threshold
  int max_inner = 10;
  double alm_tol = 1e-6;
  int alm_max_iters = 200;
  /// Recovery slack on the corridor constraints (half-width used is
  /// half_width + corridor_slack). Set per plan by the callers when the start
  /// has drifted onto or past the wall; not a config-file parameter.
  double corridor_slack = 0.0;
};

enum class SolveStatus { converged, max_iters, fallback };

struct SolveResult {
  Strategy strategy;
  double objective = 0.0;  // unwrapped progress gain tau(p_N) - tau(p_0)
  std::vector<double> collision_multipliers;
  std::vector<Vec2> collision_bearings;  // linearization bearings of the final subproblem
  std::vector<double> corridor_hi_multipliers;
  std::vector<double> corridor_lo_multipliers;
  std::vector<double> ball_multipliers;
  int iterations = 0;
  double residual = 0.0;
  double kkt_residual = 0.0;  // of the final convex subproblem
  SolveStatus status = SolveStatus::fallback;

  /// Receding-horizon shift of the strategy together with its multipliers.
  SolveResult shifted() const;
};

/// Constant-speed track-following rollout clamped into the corridor.
Strategy track_rollout(const TrackModel& track, const Vec2& start, double speed, double dt,
                       int horizon);

/// Best response to a fixed opponent trajectory by sequential convex
/// approximation: linearized progress objective plus the fixed sensitivity
/// term, half-plane collision and corridor constraints, exact control balls.
/// opponent_traj must hold the N predicted opponent positions for steps
/// 1..N; opponent_now, when given, is the opponent's current position and is
/// only used for the start-overlap check. A warm start provides the initial
/// iterate and, when its multipliers match the horizon, the dual warm start
/// of the first subproblem; re-solving from an optimal warm start returns it
/// unchanged. Never throws past the start checks: a subproblem failure
/// yields the stationary fallback strategy.
SolveResult best_response(const TrackModel& track, const PlayerConfig& own, const Vec2& start,
                          const std::vector<Vec2>& opponent_traj, const SensitivityTerm& sens,
                          const SolverParams& params, const SolveResult* warm = nullptr,
                          const Vec2* opponent_now = nullptr);

}  // namespace drace
