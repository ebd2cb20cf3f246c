#pragma once

#include <optional>

#include "drace/trajopt.hpp"

namespace drace {

struct PlannerParams {
  int ibr_iterations = 3;  // L
  double alpha = 1.0;      // aggressiveness weight on the opponent-reaction term
  SolverParams solver;
  /// The ego's assumption about the opponent (speed limit, separation);
  /// may differ from the opponent's true configuration.
  PlayerConfig opponent_model;
  /// Keep the opponent fixed at the initial guess instead of best-responding
  /// for it. With alpha = 0 this reduces the planner to the MPC baseline.
  bool fixed_opponent = false;
  double convergence_tol = 1e-4;
};

/// Inputs of one planning step: both players' current positions (the
/// opponent's possibly estimated), the ego's own limits and its model of the
/// opponent, and the previous plans for warm starting.
struct GameSnapshot {
  const TrackModel* track = nullptr;
  Vec2 own_start = Vec2::Zero();
  Vec2 opponent_start = Vec2::Zero();
  PlayerConfig own_config;
  PlayerConfig opponent_config;
  std::optional<SolveResult> previous_own;       // previous plan, for warm start
  std::optional<SolveResult> previous_opponent;  // previous opponent prediction
  /// Optional override of the opponent initial guess (e.g. the straight-line
  /// prediction when running in fixed-opponent mode).
  std::optional<Strategy> opponent_guess;
};

struct PlanResult {
  SolveResult own;
  SolveResult predicted_opponent;
  int iterations = 0;      // alternations executed
  bool converged = false;  // strategy change <= convergence_tol for both players
  double last_change = 0.0;
  bool recovered = false;  // separation violation at the start, d_min relaxed
};

/// Initial guess for the opponent: the previous predicted plan shifted by one
/// step when available, otherwise a constant-speed track-following rollout at
/// the assumed opponent speed.
Strategy initial_opponent_guess(const GameSnapshot& snapshot, const PlannerParams& params);

/// Iterated best response: alternately solve the sensitivity-augmented
/// problem for self and for the opponent, then conclude with one extra solve
/// of the ego problem. Each solve feeds the collision multipliers and
/// bearings of the previous solve into the other player's objective.
PlanResult plan(const GameSnapshot& snapshot, const PlannerParams& params);

/// Infinity-norm residual of the necessary conditions for a Nash equilibrium
/// at the pair of returned strategies: stationarity with the adjusted
/// multipliers lambda_i - alpha * lambda_j, primal feasibility, complementary
/// slackness, and nonnegativity of the adjusted multipliers.
double nash_kkt_residual(const PlanResult& result, const GameSnapshot& snapshot,
                         const PlannerParams& params);

}  // namespace drace
