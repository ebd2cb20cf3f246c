#include "drace/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "drace/baselines.hpp"
#include "drace/config.hpp"
#include "drace/estimator.hpp"
#include "drace/game_planner.hpp"

namespace drace::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Strategy strategy_from_positions(const Vec2& start, double dt, const std::vector<Vec2>& pts) {
  std::vector<Vec2> controls(pts.size());
  Vec2 prev = start;
  for (size_t k = 0; k < pts.size(); ++k) {
    controls[k] = pts[k] - prev;
    prev = pts[k];
  }
  return Strategy::from_controls(start, dt, std::move(controls));
}

Vec2 corridor_point(const TrackModel& track, double tau, double lateral) {
  const TrackFrame f = track.frame_at(tau);
  return f.point + lateral * f.normal;
}

}  // namespace

PolylineOracle::PolylineOracle(const TrackModel& track, int samples) {
  points_.resize(samples);
  step_ = track.total_length() / samples;
  for (int i = 0; i < samples; ++i) points_[i] = track.frame_at(i * step_).point;
}

double PolylineOracle::tau(const Vec2& p) const {
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < points_.size(); ++i) {
    const double d = (points_[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best * step_;
}

double PolylineOracle::distance(const Vec2& p) const {
  double best_d = std::numeric_limits<double>::infinity();
  for (const Vec2& q : points_) best_d = std::min(best_d, (q - p).squaredNorm());
  return std::sqrt(best_d);
}

namespace {

// Grid search over two control steps with box refinement around the
// incumbent. The evaluator returns the objective or -inf when infeasible.
template <typename Eval>
GridSolution grid_search_n2(double u_max, int points, int refine_levels, Eval&& eval) {
  GridSolution sol;
  sol.objective = -std::numeric_limits<double>::infinity();
  sol.controls = {Vec2::Zero(), Vec2::Zero()};

  auto sweep = [&](const Vec2& c1, const Vec2& c2, double half, int pts) {
    const double step = 2.0 * half / (pts - 1);
    for (int i1 = 0; i1 < pts; ++i1)
      for (int j1 = 0; j1 < pts; ++j1) {
        const Vec2 u1 = c1 + Vec2(-half + i1 * step, -half + j1 * step);
        if (u1.norm() > u_max) continue;
        for (int i2 = 0; i2 < pts; ++i2)
          for (int j2 = 0; j2 < pts; ++j2) {
            const Vec2 u2 = c2 + Vec2(-half + i2 * step, -half + j2 * step);
            if (u2.norm() > u_max) continue;
            const double obj = eval(u1, u2);
            if (obj > sol.objective) {
              sol.objective = obj;
              sol.controls = {u1, u2};
              sol.feasible = true;
            }
          }
      }
  };

  sweep(Vec2::Zero(), Vec2::Zero(), u_max, points);
  double half = 3.0 * 2.0 * u_max / (points - 1);
  for (int level = 0; level < refine_levels && sol.feasible; ++level) {
    sweep(sol.controls[0], sol.controls[1], half, 25);
    half *= 0.25;
  }
  return sol;
}

}  // namespace

GridSolution qclp_grid_oracle(const QclpProblem& problem, int points_per_axis,
                              int refine_levels) {
  const Vec2 p0 = problem.start;
  return grid_search_n2(
      problem.u_max, points_per_axis, refine_levels, [&](const Vec2& u1, const Vec2& u2) {
        const Vec2 p1 = p0 + u1;
        const Vec2 p2 = p1 + u2;
        for (const HalfPlane& hp : problem.planes) {
          const Vec2& p = hp.k == 1 ? p1 : p2;
          if (hp.a.dot(p) > hp.b + 1e-12) return -std::numeric_limits<double>::infinity();
        }
        return problem.objective[0].dot(p1) + problem.objective[1].dot(p2);
      });
}

GridSolution best_response_grid_oracle(const TrackModel& track, const PlayerConfig& config,
                                       const Vec2& start, const std::vector<Vec2>& opponent,
                                       double dt, int points_per_axis, int refine_levels) {
  const double u_max = config.v_max * dt;
  const double tau0 = project(track, start).tau;
  const double L = track.total_length();
  return grid_search_n2(
      u_max, points_per_axis, refine_levels, [&](const Vec2& u1, const Vec2& u2) {
        const Vec2 p1 = start + u1;
        const Vec2 p2 = p1 + u2;
        if ((opponent[0] - p1).norm() < config.d_min ||
            (opponent[1] - p2).norm() < config.d_min)
          return -std::numeric_limits<double>::infinity();
        const TrackFrame f1 = project(track, p1, tau0);
        if (std::abs(f1.normal.dot(p1 - f1.point)) > track.half_width())
          return -std::numeric_limits<double>::infinity();
        const TrackFrame f2 = project(track, p2, f1.tau);
        if (std::abs(f2.normal.dot(p2 - f2.point)) > track.half_width())
          return -std::numeric_limits<double>::infinity();
        return wrap_diff(f1.tau - tau0, L) + wrap_diff(f2.tau - f1.tau, L);
      });
}

// --- Criterion 1: progress sensitivity vs. finite differences of tau --------

Check check_sensitivity_formula(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Check c{"sensitivity formula vs finite differences", false, ""};
  const std::vector<TrackModel> tracks = {make_paper_track(), make_circle_track(5.0, 1.5),
                                          make_hardware_track()};
  std::mt19937_64 rng(seed);
  const double fd_step = 1e-6;
  double worst = 0.0;
  int checked = 0;
  for (const TrackModel& track : tracks) {
    const double L = track.total_length();
    std::uniform_real_distribution<double> utau(1e-3, L - 1e-3);
    std::uniform_real_distribution<double> ulat(-0.9, 0.9);
    for (int i = 0; i < 100; ++i) {
      const double tau = utau(rng);
      const Vec2 p = corridor_point(track, tau, ulat(rng) * track.half_width());
      const Eigen::RowVector2d sens = progress_sensitivity(track, p, tau);
      Eigen::RowVector2d fd;
      for (int axis = 0; axis < 2; ++axis) {
        Vec2 d = Vec2::Zero();
        d[axis] = fd_step;
        const double tp = project(track, p + d, tau).tau;
        const double tm = project(track, p - d, tau).tau;
        fd[axis] = wrap_diff(tp - tm, L) / (2.0 * fd_step);
      }
      worst = std::max(worst, (sens - fd).norm() / sens.norm());
      ++checked;
    }
  }
  const double elapsed = seconds_since(t0);
  c.pass = worst <= 1e-5 && elapsed < 5.0;
  c.detail = "3 tracks x 100 points, worst rel err " + fmt(worst, 3) + ", " +
             fmt(elapsed, 3) + " s";
  return c;
}

// --- Criterion 2: multiplier sensitivity of the best-response return --------

Check check_lemma1(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Check c{"best-response return sensitivity (multipliers)", false, ""};
  const TrackModel track = make_paper_track();
  const double L = track.total_length();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  SolverParams params;
  params.horizon_steps = 5;
  params.dt = 0.1;
  params.inner_tol = 1e-10;
  params.max_inner = 60;
  params.alm_tol = 1e-9;
  params.alm_max_iters = 600;

  PlayerConfig cfg;
  cfg.v_max = 0.6;
  cfg.d_min = 0.4;

  const int n = params.horizon_steps;
  const double eps = 1e-4;
  int qualified = 0, failed = 0, produced = 0;
  double worst = 0.0;
  int attempts = 0;
  while (produced < 25 && attempts < 400) {
    ++attempts;
    const double tau = u01(rng) * L;
    const double lat = (u01(rng) - 0.5) * 1.2 * track.half_width();
    const Vec2 start = corridor_point(track, tau, lat);
    const double gap = 0.42 + 0.10 * u01(rng);
    const Vec2 opp_start =
        corridor_point(track, track.wrap_tau(tau + gap), lat + 0.2 * (u01(rng) - 0.5));
    if ((opp_start - start).norm() < cfg.d_min + 0.01) continue;
    const Strategy opp_roll = track_rollout(track, opp_start, 0.3, params.dt, n);
    const std::vector<Vec2>& pred = opp_roll.positions;

    const SolveResult base =
        best_response(track, cfg, start, pred, SensitivityTerm{}, params);
    if (base.status == SolveStatus::fallback) continue;
    const double lam_max =
        *std::max_element(base.collision_multipliers.begin(), base.collision_multipliers.end());
    if (lam_max < 1e-3) continue;
    ++produced;

    // Random perturbation direction of the opponent strategy, norm eps.
    std::vector<Vec2> delta(n);
    double norm_sq = 0.0;
    for (Vec2& d : delta) {
      d = Vec2(u01(rng) - 0.5, u01(rng) - 0.5);
      norm_sq += d.squaredNorm();
    }
    for (Vec2& d : delta) d *= eps / std::sqrt(norm_sq);

    double predicted = 0.0;
    for (int k = 0; k < n; ++k) {
      const Vec2 rel = pred[k] - base.strategy.positions[k];
      if (rel.norm() < 1e-9) continue;
      predicted += base.collision_multipliers[k] * rel.normalized().dot(delta[k]);
    }

    std::vector<Vec2> plus(n), minus(n);
    for (int k = 0; k < n; ++k) {
      plus[k] = pred[k] + delta[k];
      minus[k] = pred[k] - delta[k];
    }
    const SolveResult rp = best_response(track, cfg, start, plus, SensitivityTerm{}, params, &base);
    const SolveResult rm =
        best_response(track, cfg, start, minus, SensitivityTerm{}, params, &base);

    auto active_set = [n](const SolveResult& r) {
      std::vector<bool> a(n);
      for (int k = 0; k < n; ++k) a[k] = r.collision_multipliers[k] > 1e-5;
      return a;
    };
    if (active_set(rp) != active_set(base) || active_set(rm) != active_set(base)) continue;
    ++qualified;

    const double fd = 0.5 * (rp.objective - rm.objective);
    const double rel_err = std::abs(predicted - fd) / std::max(std::abs(fd), 1e-8);
    worst = std::max(worst, rel_err);
    if (rel_err > 0.10) ++failed;
  }
  const double elapsed = seconds_since(t0);
  c.pass = produced == 25 && qualified >= 20 && failed == 0 && elapsed < 60.0;
  c.detail = fmt(qualified, 2) + "/25 qualified (active set unchanged), worst rel err " +
             fmt(worst, 3) + ", " + fmt(elapsed, 3) + " s";
  return c;
}

// --- Criterion 3: solver optimality vs. the control-grid oracle -------------

Check check_solver_optimality(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Check c{"subproblem optimality vs grid oracle", false, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0, worst_kkt = 0.0;
  for (int i = 0; i < 50; ++i) {
    QclpProblem p;
    p.start = Vec2::Zero();
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
    const QclpResult res = solve_qclp(p);
    const GridSolution oracle = qclp_grid_oracle(p);
    worst = std::max(worst, std::abs(res.objective - oracle.objective));
    worst_kkt = std::max(worst_kkt, res.kkt_residual);
  }
  const double elapsed = seconds_since(t0);
  c.pass = worst <= 1e-3 && worst_kkt <= 1e-6 && elapsed < 60.0;
  c.detail = "50 instances, worst |obj - oracle| " + fmt(worst, 3) + ", worst KKT " +
             fmt(worst_kkt, 3) + ", " + fmt(elapsed, 3) + " s";
  return c;
}

// --- Criterion 4: Theorem 1 (convergence implies Nash conditions) -----------

Check check_theorem1(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Check c{"IBR convergence and Nash KKT residual", false, ""};
  const TrackModel track = make_paper_track();
  const double L = track.total_length();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  PlannerParams params;
  params.alpha = 0.05;
  params.ibr_iterations = 10;
  params.convergence_tol = 1e-4;
  params.solver.horizon_steps = 10;
  params.solver.dt = 0.1;

  PlayerConfig fast;
  fast.v_max = 0.6;
  fast.d_min = 0.8;
  PlayerConfig slow;
  slow.v_max = 0.5;
  slow.d_min = 0.8;

  int converged = 0, interacting = 0, residual_fail = 0, produced = 0, attempts = 0;
  double worst_residual = 0.0;
  while (produced < 100 && attempts < 500) {
    ++attempts;
    const double tau_leader = u01(rng) * L;
    const double lat_leader = (u01(rng) - 0.5) * track.half_width();
    const Vec2 leader = corridor_point(track, tau_leader, lat_leader);
    const double gap = 0.82 + 0.13 * u01(rng);
    const double lat_chaser = lat_leader + 0.6 * (u01(rng) - 0.5);
    const Vec2 chaser =
        corridor_point(track, track.wrap_tau(tau_leader - gap),
                       std::clamp(lat_chaser, -0.9 * track.half_width(),
                                  0.9 * track.half_width()));
    if ((leader - chaser).norm() < fast.d_min + 0.02) continue;
    ++produced;

    GameSnapshot snap;
    snap.track = &track;
    snap.own_start = chaser;
    snap.opponent_start = leader;
    snap.own_config = fast;
    snap.opponent_config = slow;
    const PlanResult res = plan(snap, params);
    const bool interacts =
        *std::max_element(res.own.collision_multipliers.begin(),
                          res.own.collision_multipliers.end()) > 1e-6 ||
        *std::max_element(res.predicted_opponent.collision_multipliers.begin(),
                          res.predicted_opponent.collision_multipliers.end()) > 1e-6;
    if (interacts) ++interacting;
    if (!res.converged) continue;
    ++converged;
    const double residual = nash_kkt_residual(res, snap, params);
    worst_residual = std::max(worst_residual, residual);
    if (residual > 1e-4) ++residual_fail;
  }
  const double elapsed = seconds_since(t0);
  c.pass = produced == 100 && converged >= 90 && residual_fail == 0 && elapsed < 300.0;
  c.detail = fmt(converged, 3) + "/100 converged (" + fmt(interacting, 3) +
             " interacting), worst residual " + fmt(worst_residual, 3) + ", " +
             fmt(elapsed, 3) + " s";
  return c;
}

// --- Criterion 5: alpha = 0 reduction to the MPC baseline -------------------

Check check_alpha_zero_reduction(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Check c{"alpha=0 GTP equals MPC baseline", false, ""};
  const TrackModel track = make_paper_track();
  const double L = track.total_length();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  PlannerParams params;
  params.alpha = 0.0;
  params.ibr_iterations = 1;
  params.fixed_opponent = true;
  params.solver.horizon_steps = 20;
  params.solver.dt = 0.1;

  double worst = 0.0;
  int produced = 0, attempts = 0;
  while (produced < 20 && attempts < 200) {
    ++attempts;
    const double tau = u01(rng) * L;
    const Vec2 own = corridor_point(track, tau, (u01(rng) - 0.5) * track.half_width());
    const double gap = 0.85 + 1.8 * u01(rng);
    const Vec2 opp = corridor_point(track, track.wrap_tau(tau + gap),
                                    (u01(rng) - 0.5) * track.half_width());
    if ((own - opp).norm() < 0.82) continue;
    ++produced;

    GameSnapshot snap;
    snap.track = &track;
    snap.own_start = own;
    snap.opponent_start = opp;
    snap.own_config.v_max = 0.6;
    snap.opponent_config.v_max = 0.5;

    const SolveResult mpc = mpc_plan(snap, params.solver);
    GameSnapshot gsnap = snap;
    gsnap.opponent_guess = strategy_from_positions(
        opp, params.solver.dt,
        straight_line_prediction(track, opp, snap.opponent_config.v_max, params.solver.dt,
                                 params.solver.horizon_steps));
    const PlanResult gtp = plan(gsnap, params);
    for (int k = 0; k < params.solver.horizon_steps; ++k) {
      worst = std::max(worst, (mpc.strategy.positions[k] - gtp.own.strategy.positions[k])
                                  .cwiseAbs()
                                  .maxCoeff());
      worst = std::max(worst, (mpc.strategy.controls[k] - gtp.own.strategy.controls[k])
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  const double elapsed = seconds_since(t0);
  c.pass = produced == 20 && worst <= 1e-6;
  c.detail = "20 snapshots, worst strategy difference " + fmt(worst, 3) + ", " +
             fmt(elapsed, 3) + " s";
  return c;
}

// --- Criterion 8: estimator consistency and visibility maintenance ----------

Check check_estimator_consistency(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Check c{"estimator NEES band and FOV maintenance", false, ""};

  // 20-run Monte Carlo of the exact filter model (gate disabled).
  EstimatorParams params;
  params.gate_chi2 = 1e18;
  const Mat6 q = params.process_noise_density();
  const double dt = 0.01;
  const int steps = 400;
  const int meas_every = 7;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Vec6 mean0;
  mean0 << 1.0, 0.3, -0.2, 0.05, -0.02, 0.01;
  Mat6 p0 = Mat6::Zero();
  p0.topLeftCorner<3, 3>() = 0.04 * Mat3::Identity();
  p0.bottomRightCorner<3, 3>() = 0.01 * Mat3::Identity();

  const Eigen::LLT<Mat6> chol_p0(p0);
  const Eigen::LLT<Mat6> chol_q((q * dt).eval());
  const Eigen::LLT<Mat3> chol_r(params.r_measurement);

  double nees_sum = 0.0;
  long nees_count = 0;
  for (int run = 0; run < 20; ++run) {
    Vec6 noise;
    for (int i = 0; i < 6; ++i) noise[i] = gauss(rng);
    Vec6 truth = mean0 + chol_p0.matrixL() * noise;
    Belief belief;
    belief.rel_position = mean0.head<3>();
    belief.rel_velocity = mean0.tail<3>();
    belief.covariance = p0;
    const double phase = run * 0.37;
    for (int k = 0; k < steps; ++k) {
      const double t = k * dt;
      const Vec3 w(0.15 * std::sin(0.9 * t + phase), -0.1 * std::cos(0.7 * t),
                   0.8 * std::sin(0.5 * t + phase));
      // Truth propagates through the same ZOH transition plus process noise.
      Belief truth_carrier;
      truth_carrier.rel_position = truth.head<3>();
      truth_carrier.rel_velocity = truth.tail<3>();
      truth_carrier.covariance = Mat6::Identity();
      const Belief truth_next = kf_predict(truth_carrier, w, dt, params);
      for (int i = 0; i < 6; ++i) noise[i] = gauss(rng);
      truth.head<3>() = truth_next.rel_position;
      truth.tail<3>() = truth_next.rel_velocity;
      truth += chol_q.matrixL() * noise;

      belief = kf_predict(belief, w, dt, params);
      if ((k + 1) % meas_every == 0) {
        Measurement m;
        m.valid = true;
        Vec3 vnoise(gauss(rng), gauss(rng), gauss(rng));
        m.value = truth.head<3>() + chol_r.matrixL() * vnoise;
        belief = kf_update(belief, m, params).belief;
      }
      const Vec6 err = belief.mean() - truth;
      nees_sum += err.dot(belief.covariance.ldlt().solve(err));
      ++nees_count;
    }
  }
  const double nees = nees_sum / nees_count;
  const bool nees_ok = nees >= 91.573 / 20.0 && nees <= 152.211 / 20.0;

  // Visibility: filtered-mode race with both yaw controllers active.
  const TrackModel track = make_paper_track();
  RaceConfig rc;
  rc.sim_dt = 0.01;
  rc.replan_period = 0.05;
  rc.max_duration = 20.0;
  rc.finish_total = 10.0 * track.total_length();
  rc.seed = seed;
  rc.estimator_mode = EstimatorMode::filtered;
  for (int i = 0; i < 2; ++i) {
    PlayerSetup& p = rc.players[i];
    p.kind = PlannerKind::gtp;
    p.config.v_max = i == 0 ? 0.6 : 0.5;
    p.config.d_min = 0.8;
    p.config.fov_half_angle = M_PI / 4.0;
    p.planner.solver.horizon_steps = 20;
    p.planner.opponent_model = p.config;
    p.planner.opponent_model.v_max = i == 0 ? 0.5 : 0.6;
  }
  rc.players[0].start = corridor_point(track, 5.0, 0.1);
  rc.players[1].start = corridor_point(track, 6.2, -0.1);
  const RaceOutcome race = run_race(track, rc);
  double fov_rate = 1.0;
  for (int i = 0; i < 2; ++i)
    if (race.fov_attempts[i] > 0)
      fov_rate = std::min(fov_rate, double(race.fov_passes[i]) / race.fov_attempts[i]);

  const double elapsed = seconds_since(t0);
  c.pass = nees_ok && fov_rate >= 0.95;
  c.detail = "mean NEES " + fmt(nees, 4) + " (band [4.579, 7.611]), min FOV pass rate " +
             fmt(fov_rate, 4) + ", " + fmt(elapsed, 3) + " s";
  return c;
}

Check check_hardware_preset(const std::string& scenario_path) {
  Check c{"hardware preset loads", false, ""};
  try {
    const RaceScenario s = load_race_scenario(scenario_path);
    const bool geometry = std::abs(s.track.half_width() - 0.9) < 1e-9;
    c.pass = geometry && s.config.players[0].config.v_max == 0.6;
    c.detail = "track length " + fmt(s.track.total_length(), 4) + " m, half width " +
               fmt(s.track.half_width(), 3) + " m";
  } catch (const std::exception& e) {
    c.detail = e.what();
  }
  return c;
}

// --- Criteria 6, 7, 9: campaign statistics, real time, safety ---------------

std::vector<Check> check_campaign(const TrackModel& track, int n_races, std::uint64_t seed) {
  CampaignConfig config = paper_campaign_defaults();
  config.keep_traces = true;
  const CampaignReport report = run_campaign(track, config, n_races, seed);

  auto scenario = [&](const std::string& name) -> const ScenarioReport& {
    for (const ScenarioReport& s : report.scenarios)
      if (s.spec.name == name) return s;
    throw std::runtime_error("missing scenario " + name);
  };

  std::vector<Check> checks;
  const double n = n_races;

  {
    Check c{"campaign: RVO loses (c) and (e)", false, ""};
    const int rvo_wins_c = scenario("c").wins_slow;
    const int rvo_wins_e = scenario("e").wins_slow;
    c.pass = rvo_wins_c <= 0.05 * n && rvo_wins_e <= 0.05 * n;
    c.detail = "RVO wins: (c) " + fmt(rvo_wins_c, 3) + "/" + fmt(n, 3) + ", (e) " +
               fmt(rvo_wins_e, 3) + "/" + fmt(n, 3);
    checks.push_back(c);
  }
  {
    Check c{"campaign: slow GTP defends in (b)", false, ""};
    const double rate = scenario("b").wins_slow / n;
    c.pass = rate >= 0.70;
    c.detail = "GTP win rate " + fmt(rate, 3);
    checks.push_back(c);
  }
  {
    Check c{"campaign: fast GTP overtake band in (a)", false, ""};
    const double rate = scenario("a").wins_fast / n;
    c.pass = rate >= 0.15 && rate <= 0.60;
    c.detail = "GTP win rate " + fmt(rate, 3) + " (band [0.15, 0.60])";
    checks.push_back(c);
  }
  {
    Check c{"campaign: GTP mean signed gap positive in (b)-(d)", false, ""};
    const double gb = scenario("b").mean_gap_signed;
    const double gc = scenario("c").mean_gap_signed;
    const double gd = scenario("d").mean_gap_signed;
    c.pass = gb > 0 && gc > 0 && gd > 0;
    c.detail = "mean gaps (b) " + fmt(gb, 3) + ", (c) " + fmt(gc, 3) + ", (d) " + fmt(gd, 3);
    checks.push_back(c);
  }
  {
    Check c{"campaign: runtime budget", false, ""};
    c.pass = report.wall_seconds < 1800.0;
    c.detail = fmt(report.wall_seconds, 4) + " s for " + fmt(6.0 * n, 3) + " races";
    checks.push_back(c);
  }
  {
    Check c{"real-time budget: plan() latency in (b)", false, ""};
    std::vector<double> lat;
    for (const RaceRecord& r : scenario("b").races)
      lat.insert(lat.end(), r.gtp_plan_seconds.begin(), r.gtp_plan_seconds.end());
    if (lat.empty()) {
      c.detail = "no latency samples";
    } else {
      std::sort(lat.begin(), lat.end());
      double sum = 0;
      for (double v : lat) sum += v;
      const double mean = sum / lat.size();
      const double p99 = lat[static_cast<size_t>(0.99 * (lat.size() - 1))];
      c.pass = mean <= 0.050 && p99 <= 0.100;
      c.detail = "mean " + fmt(1e3 * mean, 4) + " ms, p99 " + fmt(1e3 * p99, 4) + " ms over " +
                 fmt(double(lat.size()), 6) + " plans";
    }
    checks.push_back(c);
  }
  {
    Check c{"safety: separation and corridor margins", false, ""};
    double min_sep = std::numeric_limits<double>::infinity();
    double max_corridor = -std::numeric_limits<double>::infinity();
    int monotonicity_violations = 0;
    for (const ScenarioReport& sr : report.scenarios) {
      const bool both_planned = (sr.spec.fast_kind != PlannerKind::rvo) &&
                                (sr.spec.slow_kind != PlannerKind::rvo);
      for (const RaceRecord& r : sr.races) {
        if (both_planned) min_sep = std::min(min_sep, r.min_separation);
        max_corridor = std::max(max_corridor, r.max_corridor_excess);
        if (r.winner >= 0 && !r.trace.empty()) {
          // Winner progress must not decrease over the final 10 s.
          const double t_end = r.trace.back().t;
          double prev = -std::numeric_limits<double>::infinity();
          for (const TraceSample& s : r.trace) {
            if (s.player != r.winner || s.t < t_end - 10.0) continue;
            const double total = s.laps * track.total_length() + s.tau;
            if (total < prev - 1e-9) {
              ++monotonicity_violations;
              break;
            }
            prev = total;
          }
        }
      }
    }
    c.pass = min_sep >= config.d_min - 0.1 && max_corridor <= 0.05 &&
             monotonicity_violations == 0;
    c.detail = "min separation " + fmt(min_sep, 4) + " (floor " + fmt(config.d_min - 0.1, 3) +
               "), max corridor excess " + fmt(max_corridor, 3) + ", monotonicity violations " +
               fmt(double(monotonicity_violations), 2);
    checks.push_back(c);
  }
  return checks;
}

int report(const std::vector<Check>& checks, std::ostream& os) {
  int failures = 0;
  for (const Check& c : checks) {
    os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) os << " -- " << c.detail;
    os << '\n';
    if (!c.pass) ++failures;
  }
  return failures;
}

}  // namespace drace::verify
