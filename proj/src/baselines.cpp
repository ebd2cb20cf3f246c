#include "drace/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace drace {

std::vector<Vec2> straight_line_prediction(const TrackModel& track, const Vec2& opponent_pos,
                                           double opponent_v_max, double dt, int horizon) {
  const TrackFrame f = project(track, opponent_pos);
  std::vector<Vec2> pred(horizon);
  for (int k = 1; k <= horizon; ++k)
    pred[k - 1] = opponent_pos + (k * opponent_v_max * dt) * f.tangent;
  return pred;
}

SolveResult mpc_plan(const GameSnapshot& snapshot, const SolverParams& params) {
  const std::vector<Vec2> pred =
      straight_line_prediction(*snapshot.track, snapshot.opponent_start,
                               snapshot.opponent_config.v_max, params.dt, params.horizon_steps);
  const PlayerConfig& cfg = snapshot.own_config;
  SolverParams solver = params;
  const double excess = corridor_excess(*snapshot.track, snapshot.own_start);
  if (excess > 0) solver.corridor_slack += excess + 1e-3;
  const SolveResult* warm = snapshot.previous_own ? &*snapshot.previous_own : nullptr;
  SolveResult shifted;
  if (warm && warm->strategy.horizon() == params.horizon_steps) {
    shifted = warm->shifted();
    warm = &shifted;
  } else {
    warm = nullptr;
  }
  return best_response(*snapshot.track, cfg, snapshot.own_start, pred, SensitivityTerm{},
                       solver, warm, &snapshot.opponent_start);
}

namespace {

double det2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// RVO2-style incremental linear programs over directed lines; feasible side
// is the left of each line, solutions confined to the disc of the given
// radius.

bool linear_program1(const std::vector<OrcaLine>& lines, size_t line_no, double radius,
                     const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
  const OrcaLine& ln = lines[line_no];
  const double dot = ln.point.dot(ln.direction);
  const double disc = dot * dot + radius * radius - ln.point.squaredNorm();
  if (disc < 0.0) return false;  // line misses the disc entirely
  const double sq = std::sqrt(disc);
  double t_left = -dot - sq;
  double t_right = -dot + sq;

  for (size_t i = 0; i < line_no; ++i) {
    const double denom = det2(ln.direction, lines[i].direction);
    const double numer = det2(lines[i].direction, ln.point - lines[i].point);
    if (std::abs(denom) <= 1e-12) {
      if (numer < 0.0) return false;  // parallel and fully infeasible
      continue;
    }
    const double t = numer / denom;
    if (denom >= 0.0)
      t_right = std::min(t_right, t);
    else
      t_left = std::max(t_left, t);
    if (t_left > t_right) return false;
  }

  double t;
  if (direction_opt) {
    t = opt_velocity.dot(ln.direction) > 0.0 ? t_right : t_left;
  } else {
    t = std::clamp(ln.direction.dot(opt_velocity - ln.point), t_left, t_right);
  }
  result = ln.point + t * ln.direction;
  return true;
}

size_t linear_program2(const std::vector<OrcaLine>& lines, double radius,
                       const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
  if (direction_opt) {
    result = opt_velocity * radius;
  } else if (opt_velocity.squaredNorm() > radius * radius) {
    result = opt_velocity.normalized() * radius;
  } else {
    result = opt_velocity;
  }
  for (size_t i = 0; i < lines.size(); ++i) {
    if (det2(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 temp = result;
      if (!linear_program1(lines, i, radius, opt_velocity, direction_opt, result)) {
        result = temp;
        return i;
      }
    }
  }
  return lines.size();
}

void linear_program3(const std::vector<OrcaLine>& lines, size_t num_obst_lines,
                     size_t begin_line, double radius, Vec2& result) {
  double distance = 0.0;
  for (size_t i = begin_line; i < lines.size(); ++i) {
    if (det2(lines[i].direction, lines[i].point - result) <= distance) continue;
    // Keep the obstacle lines hard; project onto the violated agent line.
    std::vector<OrcaLine> proj_lines(lines.begin(),
                                     lines.begin() + static_cast<long>(num_obst_lines));
    for (size_t j = num_obst_lines; j < i; ++j) {
      OrcaLine ln;
      const double denom = det2(lines[i].direction, lines[j].direction);
      if (std::abs(denom) <= 1e-12) {
        if (lines[i].direction.dot(lines[j].direction) > 0.0) continue;
        ln.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        ln.point = lines[i].point + (det2(lines[j].direction, lines[i].point - lines[j].point) /
                                     denom) *
                                        lines[i].direction;
      }
      ln.direction = (lines[j].direction - lines[i].direction).normalized();
      proj_lines.push_back(ln);
    }
    const Vec2 temp = result;
    if (linear_program2(proj_lines, radius,
                        Vec2(-lines[i].direction.y(), lines[i].direction.x()), true,
                        result) < proj_lines.size()) {
      result = temp;
    }
    distance = det2(lines[i].direction, lines[i].point - result);
  }
}

}  // namespace

OrcaLine agent_orca_line(const RvoAgentState& own, const RvoAgentState& other,
                         double combined_radius, double time_horizon, double time_step,
                         double responsibility, Vec2* u_out) {
  const Vec2 relative_position = other.position - own.position;
  const Vec2 relative_velocity = own.velocity - other.velocity;
  const double dist_sq = relative_position.squaredNorm();
  const double r_sq = combined_radius * combined_radius;

  OrcaLine line;
  Vec2 u;
  if (dist_sq > r_sq) {
    const double inv_horizon = 1.0 / time_horizon;
    const Vec2 w = relative_velocity - inv_horizon * relative_position;
    const double w_len_sq = w.squaredNorm();
    const double dot1 = w.dot(relative_position);
    if (dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq) {
      // Project on the cut-off circle.
      const double w_len = std::sqrt(w_len_sq);
      const Vec2 unit_w = w / w_len;
      line.direction = Vec2(unit_w.y(), -unit_w.x());
      u = (combined_radius * inv_horizon - w_len) * unit_w;
    } else {
      // Project on the nearer leg of the velocity-obstacle cone.
      const double leg = std::sqrt(dist_sq - r_sq);
      if (det2(relative_position, w) > 0.0) {
        line.direction = Vec2(relative_position.x() * leg - relative_position.y() * combined_radius,
                              relative_position.x() * combined_radius +
                                  relative_position.y() * leg) /
                         dist_sq;
      } else {
        line.direction = -Vec2(relative_position.x() * leg + relative_position.y() * combined_radius,
                               -relative_position.x() * combined_radius +
                                   relative_position.y() * leg) /
                         dist_sq;
      }
      u = relative_velocity.dot(line.direction) * line.direction - relative_velocity;
    }
  } else {
    // Already in collision: resolve within one time step.
    const double inv_step = 1.0 / time_step;
    const Vec2 w = relative_velocity - inv_step * relative_position;
    const double w_len = w.norm();
    const Vec2 unit_w = w_len > 0 ? Vec2(w / w_len) : Vec2(1, 0);
    line.direction = Vec2(unit_w.y(), -unit_w.x());
    u = (combined_radius * inv_step - w_len) * unit_w;
  }
  line.point = own.velocity + responsibility * u;
  if (u_out) *u_out = u;
  return line;
}

RvoPlanner::RvoPlanner(const TrackModel& track, const RvoParams& params)
    : track_(&track), params_(params) {
  // Discretize both corridor walls, inset by the wall margin, into a chain of
  // short segments.
  const double offset = track.half_width() - params.wall_margin;
  const double ds = std::max(0.05, 0.8 * params.polygon_resolution);
  const int steps = std::max(8, static_cast<int>(std::ceil(track.total_length() / ds)));
  for (const double side : {+1.0, -1.0}) {
    Vec2 prev;
    for (int i = 0; i <= steps; ++i) {
      const TrackFrame f = track.frame_at(track.total_length() * i / steps);
      const Vec2 q = f.point + side * offset * f.normal;
      if (i > 0) walls_.emplace_back(prev, q);
      prev = q;
    }
  }
}

Vec2 RvoPlanner::step(const RvoAgentState& own, const RvoAgentState& opponent,
                      const PlayerConfig& own_cfg, const PlayerConfig& opponent_cfg,
                      double time_step) const {
  const double v_max = own_cfg.v_max;
  const TrackFrame f = project(*track_, own.position);
  Vec2 pref_dir = f.tangent + params_.rho * (f.point - own.position);
  if (pref_dir.norm() < 1e-9) pref_dir = f.tangent;
  const Vec2 v_pref = v_max * pref_dir.normalized();

  std::vector<OrcaLine> lines;
  // Wall constraints: velocity toward a near wall bounded by distance over
  // the obstacle horizon. Full responsibility.
  const double reach = v_max * params_.obstacle_time_horizon;
  for (const auto& [a, b] : walls_) {
    const Vec2 ab = b - a;
    const double len_sq = ab.squaredNorm();
    const double t = len_sq > 0 ? std::clamp((own.position - a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
    const Vec2 q = a + t * ab;
    const Vec2 rel = q - own.position;
    const double d = rel.norm();
    if (d >= reach || d < 1e-9) continue;
    const Vec2 dir = rel / d;
    const double cap = d / params_.obstacle_time_horizon;
    OrcaLine ln;
    ln.point = cap * dir;
    ln.direction = rot90(dir);
    lines.push_back(ln);
  }
  const size_t num_obst_lines = lines.size();

  const double combined_radius = own_cfg.radius + opponent_cfg.radius;
  const double sense = (params_.time_horizon * (own_cfg.v_max + opponent_cfg.v_max) +
                        combined_radius) *
                       1.5;
  if ((opponent.position - own.position).norm() < sense) {
    lines.push_back(agent_orca_line(own, opponent, combined_radius, params_.time_horizon,
                                    time_step, 0.5));
  }

  Vec2 result;
  const size_t fail = linear_program2(lines, v_max, v_pref, false, result);
  if (fail < lines.size()) linear_program3(lines, num_obst_lines, fail, v_max, result);
  return result;
}

Vec2 rvo_step(const RvoAgentState& own, const RvoAgentState& opponent, const TrackModel& track,
              const PlayerConfig& own_cfg, const PlayerConfig& opponent_cfg,
              const RvoParams& params, double time_step) {
  return RvoPlanner(track, params).step(own, opponent, own_cfg, opponent_cfg, time_step);
}

}  // namespace drace
