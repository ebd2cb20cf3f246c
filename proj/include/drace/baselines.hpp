#pragma once

#include <optional>
#include <vector>

#include "drace/game_planner.hpp"
#include "drace/track.hpp"

namespace drace {

/// Straight-line opponent prediction of the MPC baseline: constant maximum
/// speed along the local track direction at the opponent's current position.
std::vector<Vec2> straight_line_prediction(const TrackModel& track, const Vec2& opponent_pos,
                                           double opponent_v_max, double dt, int horizon);

/// MPC baseline: single best response against the straight-line prediction,
/// no opponent-reaction term. Shares the solver with the game planner.
SolveResult mpc_plan(const GameSnapshot& snapshot, const SolverParams& params);

struct RvoParams {
  double rho = 0.5;                  // center-line attraction gain, 1/m
  double time_horizon = 2.0;         // s, agent avoidance
  double obstacle_time_horizon = 1.0;  // s, wall avoidance
  double polygon_resolution = 0.25;  // m, max wall edge length
  double wall_margin = 0.05;         // m, inset of the discretized walls
};

struct RvoAgentState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// Directed line whose left side is feasible, RVO2 convention.
struct OrcaLine {
  Vec2 point = Vec2::Zero();
  Vec2 direction = Vec2::UnitX();
};

/// ORCA half-plane induced on the own agent by the opponent disc.
/// responsibility is the share of the relative velocity adjustment taken by
/// the own agent (1/2 for reciprocal agents, 1 against static obstacles).
/// u_out, when given, receives the adjustment vector.
OrcaLine agent_orca_line(const RvoAgentState& own, const RvoAgentState& other,
                         double combined_radius, double time_horizon, double time_step,
                         double responsibility, Vec2* u_out = nullptr);

/// Reactive track-following controller with ORCA collision avoidance against
/// the opponent and the discretized corridor walls. Walls are built once at
/// construction; step() is pure and thread-safe.
class RvoPlanner {
 public:
  RvoPlanner(const TrackModel& track, const RvoParams& params);

  /// Velocity command with norm <= own_cfg.v_max (an infeasible constraint
  /// set falls back to the least-violating velocity).
  Vec2 step(const RvoAgentState& own, const RvoAgentState& opponent,
            const PlayerConfig& own_cfg, const PlayerConfig& opponent_cfg,
            double time_step) const;

  const std::vector<std::pair<Vec2, Vec2>>& wall_segments() const { return walls_; }

 private:
  const TrackModel* track_;
  RvoParams params_;
  std::vector<std::pair<Vec2, Vec2>> walls_;
};

/// Convenience wrapper constructing the wall discretization on the fly.
Vec2 rvo_step(const RvoAgentState& own, const RvoAgentState& opponent, const TrackModel& track,
              const PlayerConfig& own_cfg, const PlayerConfig& opponent_cfg,
              const RvoParams& params, double time_step);

}  // namespace drace
