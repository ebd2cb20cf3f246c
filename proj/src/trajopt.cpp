#include "drace/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drace {

namespace {

constexpr double kDegenerateBearing = 1e-6;
constexpr double kNonlinearSlack = 5e-3;

// Frames along the current iterate, projected with chained hints so the
// branch stays continuous across junctions and the lap wrap.
std::vector<TrackFrame> chain_frames(const TrackModel& track, const std::vector<Vec2>& pts,
                                     double hint0) {
  std::vector<TrackFrame> frames;
  frames.reserve(pts.size());
  double hint = hint0;
  for (const Vec2& p : pts) {
    frames.push_back(project(track, p, hint));
    hint = frames.back().tau;
  }
  return frames;
}

double unwrapped_gain(const TrackModel& track, const std::vector<TrackFrame>& frames,
                      double tau0) {
  double gain = 0.0;
  double prev = tau0;
  for (const TrackFrame& f : frames) {
    gain += wrap_diff(f.tau - prev, track.total_length());
    prev = f.tau;
  }
  return gain;
}

}  // namespace

Strategy Strategy::stationary(const Vec2& start, double dt, int horizon) {
  Strategy s;
  s.start = start;
  s.dt = dt;
  s.controls.assign(horizon, Vec2::Zero());
  s.positions.assign(horizon, start);
  return s;
}

Strategy Strategy::from_controls(const Vec2& start, double dt, std::vector<Vec2> controls) {
  Strategy s;
  s.start = start;
  s.dt = dt;
  s.positions.reserve(controls.size());
  Vec2 p = start;
  for (const Vec2& u : controls) {
    p += u;
    s.positions.push_back(p);
  }
  s.controls = std::move(controls);
  return s;
}

Strategy Strategy::shifted() const {
  std::vector<Vec2> u(controls.begin() + 1, controls.end());
  u.push_back(controls.back());
  return from_controls(positions.empty() ? start : positions.front(), dt, std::move(u));
}

Strategy Strategy::rebased(const Vec2& new_start) const {
  return from_controls(new_start, dt, controls);
}

Strategy track_rollout(const TrackModel& track, const Vec2& start, double speed, double dt,
                       int horizon) {
  const double u_max = speed * dt;
  const double lateral_cap = track.half_width() * (1.0 - 1e-12);
  std::vector<Vec2> controls;
  controls.reserve(horizon);
  Vec2 p = start;
  double hint = project(track, start).tau;
  for (int k = 0; k < horizon; ++k) {
    const TrackFrame f = project(track, p, hint);
    Vec2 next = p + u_max * f.tangent;
    const TrackFrame fn = project(track, next, f.tau);
    const double e = fn.normal.dot(next - fn.point);
    if (std::abs(e) > lateral_cap)
      next = fn.point + std::copysign(lateral_cap, e) * fn.normal;
    Vec2 u = next - p;
    if (u.norm() > u_max) u *= u_max / u.norm();
    controls.push_back(u);
    p += u;
    hint = fn.tau;
  }
  return Strategy::from_controls(start, dt, std::move(controls));
}

SolveResult SolveResult::shifted() const {
  SolveResult r = *this;
  r.strategy = strategy.shifted();
  auto shift = [](std::vector<double>& v) {
    if (v.empty()) return;
    v.erase(v.begin());
    v.push_back(v.back());
  };
  shift(r.collision_multipliers);
  shift(r.corridor_hi_multipliers);
  shift(r.corridor_lo_multipliers);
  shift(r.ball_multipliers);
  if (!r.collision_bearings.empty()) {
    r.collision_bearings.erase(r.collision_bearings.begin());
    r.collision_bearings.push_back(r.collision_bearings.back());
  }
  return r;
}

SolveResult best_response(const TrackModel& track, const PlayerConfig& own, const Vec2& start,
                          const std::vector<Vec2>& opponent_traj, const SensitivityTerm& sens,
                          const SolverParams& params, const SolveResult* warm,
                          const Vec2* opponent_now) {
  const int n = params.horizon_steps;
  const double u_max = own.v_max * params.dt;
  if (static_cast<int>(opponent_traj.size()) != n)
    throw std::invalid_argument("opponent trajectory length must equal the horizon");
  if (corridor_excess(track, start) > params.corridor_slack + 1e-6)
    throw InfeasibleStart("start outside the corridor");
  if (opponent_now && (start - *opponent_now).norm() < 1e-6)
    throw InfeasibleStart("start coincides with the opponent position");
  const double half_width = track.half_width() + params.corridor_slack;

  const double tau0 = project(track, start).tau;

  const std::vector<Vec2>& opp = opponent_traj;

  auto make_fallback = [&]() {
    SolveResult r;
    r.strategy = Strategy::stationary(start, params.dt, n);
    r.objective = 0.0;
    r.collision_multipliers.assign(n, 0.0);
    r.collision_bearings.assign(n, Vec2::Zero());
    r.corridor_hi_multipliers.assign(n, 0.0);
    r.corridor_lo_multipliers.assign(n, 0.0);
    r.ball_multipliers.assign(n, 0.0);
    r.status = SolveStatus::fallback;
    return r;
  };

  const bool have_warm = warm && warm->strategy.horizon() == n;
  Strategy iterate = have_warm ? warm->strategy.rebased(start)
                               : track_rollout(track, start, own.v_max, params.dt, n);

  // A guess that meets the opponent prediction nearly head-on gives
  // along-track bearings whose half-planes can be unsatisfiable at the speed
  // limit. This rebuilds the iterate as a rollout that pulls toward the freer
  // corridor side, so the linearization starts from a dodging geometry.
  auto dodge_guess = [&](const Strategy& current) {
    double worst = std::numeric_limits<double>::infinity();
    int worst_k = 0;
    for (int k = 0; k < n; ++k) {
      const double dist = (opp[k] - current.positions[k]).norm();
      if (dist < worst) {
        worst = dist;
        worst_k = k;
      }
    }
    if (worst >= own.d_min) return current;
    const TrackFrame f0 = project(track, current.positions[worst_k]);
    const double rel = f0.normal.dot(start - opp[worst_k]);
    const double side = rel >= 0 ? 1.0 : -1.0;
    const double target = side * std::min(track.half_width() - 0.05, own.d_min);
    std::vector<Vec2> controls(n);
    Vec2 p = start;
    double hint = tau0;
    for (int k = 0; k < n; ++k) {
      const TrackFrame f = project(track, p, hint);
      hint = f.tau;
      const Vec2 goal = f.point + u_max * f.tangent + target * f.normal;
      Vec2 u = goal - p;
      if (u.norm() > u_max) u *= u_max / u.norm();
      controls[k] = u;
      p += u;
    }
    return Strategy::from_controls(start, params.dt, std::move(controls));
  };
  if (!have_warm) iterate = dodge_guess(iterate);

  QclpProblem sub;
  sub.start = start;
  sub.horizon = n;
  sub.u_max = u_max;
  sub.objective.resize(n);
  sub.planes.resize(3 * n);
  // Collision constraints are exact-penalty soft: an opponent prediction that
  // cannot be evaded at the speed limit yields the least-violation dodge
  // instead of a dead stop. Feasible instances are unaffected by the cap.
  sub.n_soft = n;
  sub.soft_cap = 50.0;

  QclpParams qp;
  qp.tol = params.alm_tol;
  qp.max_outer = params.alm_max_iters;

  QclpWarmStart qwarm;
  qwarm.mu = Eigen::VectorXd::Zero(3 * n);
  if (have_warm && static_cast<int>(warm->collision_multipliers.size()) == n &&
      static_cast<int>(warm->corridor_hi_multipliers.size()) == n &&
      static_cast<int>(warm->corridor_lo_multipliers.size()) == n) {
    for (int k = 0; k < n; ++k) {
      qwarm.mu[k] = warm->collision_multipliers[k];
      qwarm.mu[n + k] = warm->corridor_hi_multipliers[k];
      qwarm.mu[2 * n + k] = warm->corridor_lo_multipliers[k];
    }
  }
  QclpResult qres;
  std::vector<Vec2> bearings(n, Vec2::Zero());

  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  bool converged = false;
  bool relinearized = false;
  bool last_ok = false;
  int consecutive_failures = 0;
  while (iter < params.max_inner) {
    ++iter;
    const std::vector<TrackFrame> frames = chain_frames(track, iterate.positions, tau0);

    // Linearized objective: progress sensitivity at the terminal point plus
    // the fixed opponent-reaction term.
    for (int k = 0; k < n; ++k) sub.objective[k] = Vec2::Zero();
    {
      const Vec2 pN = iterate.positions[n - 1];
      const TrackFrame& fN = frames[n - 1];
      const double denom = 1.0 - fN.curvature * (pN - fN.point).dot(fN.normal);
      if (std::abs(denom) <= 1e-6) return make_fallback();
      sub.objective[n - 1] += fN.tangent / denom;
    }
    if (!sens.empty()) {
      // The opponent-reaction term is a first-order model of the opponent's
      // return; clamp its per-step weight to keep the model inside its trust
      // range (capped model multipliers would otherwise dominate everything).
      constexpr double kSensWeightCap = 2.0;
      const int m = std::min<int>(n, sens.multipliers.size());
      for (int k = 0; k < m; ++k) {
        const double w = std::min(sens.alpha * sens.multipliers[k], kSensWeightCap);
        sub.objective[k] += w * sens.bearings[k];
      }
    }

    for (int k = 0; k < n; ++k) {
      // Collision half-plane: bearing^T (p_opp - p) >= d_min.
      Vec2 rel = opp[k] - iterate.positions[k];
      Vec2 b = rel.norm() < kDegenerateBearing ? frames[k].normal : rel.normalized();
      bearings[k] = b;
      sub.planes[k] = HalfPlane{k + 1, b, b.dot(opp[k]) - own.d_min};
      // Corridor half-planes around the frozen frame.
      const Vec2& nrm = frames[k].normal;
      const double c = nrm.dot(frames[k].point);
      sub.planes[n + k] = HalfPlane{k + 1, nrm, half_width + c};
      sub.planes[2 * n + k] = HalfPlane{k + 1, -nrm, half_width - c};
    }

    qwarm.u.resize(2 * n);
    for (int k = 0; k < n; ++k) qwarm.u.segment<2>(2 * k) = iterate.controls[k];

    qres = solve_qclp(sub, qp, &qwarm);
    qwarm.mu = qres.plane_multipliers;
    last_ok = qres.status == QclpStatus::ok;
    if (!last_ok) {
      if (consecutive_failures == 0 && iter <= 2) {
        // First failure: restart the linearization from a dodging guess.
        iterate = dodge_guess(iterate);
        qwarm.mu.setZero();
        ++consecutive_failures;
        continue;
      }
      // Otherwise re-linearize from the least-violation iterate; the rotated
      // bearings may still restore feasibility.
      if (++consecutive_failures >= 4) break;
    } else {
      consecutive_failures = 0;
    }

    double r2 = 0.0;
    for (int k = 0; k < n; ++k) {
      r2 += (qres.positions[k] - iterate.positions[k]).squaredNorm();
      r2 += (qres.controls[k] - iterate.controls[k]).squaredNorm();
    }
    residual = std::sqrt(r2);
    iterate = Strategy::from_controls(start, params.dt, qres.controls);

    if (last_ok && residual <= params.inner_tol) {
      // Accept only when the linearized constraint values agree with the true
      // ones to the linearization slack; otherwise linearize once more at the
      // new point. (A soft-violated solution can be accurate: the comparison
      // is model error, not feasibility.)
      double lin_err = 0.0;
      double hint = tau0;
      for (int k = 0; k < n; ++k) {
        const TrackFrame f = project(track, iterate.positions[k], hint);
        hint = f.tau;
        const double e_true = std::abs(f.normal.dot(iterate.positions[k] - f.point));
        const double e_lin =
            std::abs(sub.planes[n + k].a.dot(iterate.positions[k]) - sub.planes[n + k].b +
                     half_width);
        lin_err = std::max(lin_err, std::abs(e_true - e_lin));
        const Vec2 rel = opp[k] - iterate.positions[k];
        lin_err = std::max(lin_err, rel.norm() - bearings[k].dot(rel));
      }
      if (lin_err <= kNonlinearSlack || relinearized) {
        converged = true;
        break;
      }
      relinearized = true;
    }
  }
  if (!last_ok) return make_fallback();

  SolveResult result;
  result.strategy = iterate;
  result.iterations = iter;
  result.residual = residual;
  result.kkt_residual = qres.kkt_residual;
  result.status = converged ? SolveStatus::converged : SolveStatus::max_iters;
  result.collision_multipliers.resize(n);
  result.corridor_hi_multipliers.resize(n);
  result.corridor_lo_multipliers.resize(n);
  result.ball_multipliers.resize(n);
  result.collision_bearings = bearings;
  for (int k = 0; k < n; ++k) {
    result.collision_multipliers[k] = qres.plane_multipliers[k];
    result.corridor_hi_multipliers[k] = qres.plane_multipliers[n + k];
    result.corridor_lo_multipliers[k] = qres.plane_multipliers[2 * n + k];
    result.ball_multipliers[k] = qres.ball_multipliers[k];
  }
  const std::vector<TrackFrame> final_frames = chain_frames(track, iterate.positions, tau0);
  result.objective = unwrapped_gain(track, final_frames, tau0);
  return result;
}

}  // namespace drace
