#include "drace/race_sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <thread>

namespace drace {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

int ticks_per(double period, double dt, const char* what) {
  const double ratio = period / dt;
  const int n = static_cast<int>(std::llround(ratio));
  if (n < 1 || std::abs(n * dt - period) > 1e-9)
    throw ConfigError(std::string("sim_dt must divide ") + what);
  return n;
}

}  // namespace

std::string to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::gtp: return "gtp";
    case PlannerKind::mpc: return "mpc";
    case PlannerKind::rvo: return "rvo";
    case PlannerKind::parked: return "parked";
  }
  return "?";
}

PlannerKind planner_kind_from_string(const std::string& s) {
  if (s == "gtp") return PlannerKind::gtp;
  if (s == "mpc") return PlannerKind::mpc;
  if (s == "rvo") return PlannerKind::rvo;
  if (s == "parked") return PlannerKind::parked;
  throw ConfigError("unknown planner kind: " + s);
}

RobotState step(const RobotState& state, const Commands& commands, const TrackModel& track,
                double dt) {
  RobotState next = state;
  next.body_velocity = commands.body_velocity;
  next.yaw_rate = commands.yaw_rate;
  next.position = state.position + rot2(state.yaw) * commands.body_velocity * dt;
  next.yaw = wrap_angle(state.yaw + commands.yaw_rate * dt);
  next.progress = update_progress(state.progress, track, next.position);
  return next;
}

namespace {

struct PlayerRuntime {
  const PlayerSetup* setup = nullptr;
  std::optional<SolveResult> prev_own;
  std::optional<SolveResult> prev_opp;
  Strategy plan_strategy;
  std::vector<Vec2> predicted_opponent;
  bool has_plan = false;
  double plan_t0 = 0.0;
  YawPlan yaw;
  Belief belief;
  bool belief_ready = false;
  std::mt19937_64 rng;
  Vec2 opp_known = Vec2::Zero();    // latest opponent position estimate
  Vec2 opp_vel_est = Vec2::Zero();  // world frame
  Vec2 world_velocity = Vec2::Zero();
  std::unique_ptr<RvoPlanner> rvo;
};

bool plans_ahead(PlannerKind k) { return k == PlannerKind::gtp || k == PlannerKind::mpc; }

}  // namespace

RaceOutcome run_race(const TrackModel& track, const RaceConfig& config) {
  const double dt = config.sim_dt;
  const int replan_ticks = ticks_per(config.replan_period, dt, "replan_period");
  const int trace_ticks = ticks_per(config.trace_period, dt, "trace_period");
  const int meas_ticks = std::max(
      1, static_cast<int>(std::llround(1.0 / (config.estimator.measurement_rate_hz * dt))));
  const bool filtered = config.estimator_mode == EstimatorMode::filtered;

  std::array<RobotState, 2> state;
  std::array<PlayerRuntime, 2> rt;
  for (int i = 0; i < 2; ++i) {
    const PlayerSetup& setup = config.players[i];
    if (corridor_excess(track, setup.start) > 0)
      throw ConfigError("player start outside the corridor");
    state[i].position = setup.start;
    const TrackFrame f = project(track, setup.start);
    state[i].yaw = std::atan2(f.tangent.y(), f.tangent.x());
    state[i].progress = ProgressState{0, f.tau, f.tau};
    rt[i].setup = &setup;
    rt[i].rng.seed(splitmix64(config.seed ^ (0x51ed270bULL * (i + 1))));
    if (setup.kind == PlannerKind::rvo)
      rt[i].rvo = std::make_unique<RvoPlanner>(track, setup.rvo);
  }
  const double start_sep = (state[0].position - state[1].position).norm();
  const double d_req = std::max(config.players[0].config.d_min, config.players[1].config.d_min);
  if (config.players[0].kind != PlannerKind::parked &&
      config.players[1].kind != PlannerKind::parked && start_sep < d_req - 1e-9)
    throw ConfigError("player starts violate the separation limit");
  rt[0].opp_known = state[1].position;
  rt[1].opp_known = state[0].position;

  RaceOutcome out;
  out.min_separation = start_sep;
  std::array<bool, 2> in_corridor_violation{false, false};
  bool in_sep_violation = false;
  const bool monitor_sep = plans_ahead(config.players[0].kind) &&
                           plans_ahead(config.players[1].kind);

  const int max_steps = static_cast<int>(std::ceil(config.max_duration / dt));
  double t = 0.0;
  int tick = 0;
  for (; tick <= max_steps; ++tick) {
    t = tick * dt;

    // Synthetic camera and filter update at the measurement rate.
    if (filtered && tick % meas_ticks == 0) {
      for (int i = 0; i < 2; ++i) {
        if (rt[i].setup->kind == PlannerKind::parked) continue;
        const int j = 1 - i;
        out.fov_attempts[i]++;
        const Measurement meas =
            simulate_measurement(state[i].position, state[i].yaw, state[j].position,
                                 rt[i].setup->config, config.estimator.r_measurement,
                                 rt[i].rng, t);
        if (!meas.valid) continue;
        out.fov_passes[i]++;
        if (rt[i].belief_ready) {
          rt[i].belief = kf_update(rt[i].belief, meas, config.estimator).belief;
        } else {
          rt[i].belief = initialize_belief(meas, config.estimator,
                                           rt[i].setup->config.v_max,
                                           rt[i].setup->planner.opponent_model.v_max);
          rt[i].belief_ready = true;
        }
      }
    }

    // Opponent estimates used by planning and avoidance.
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      if (!filtered) {
        rt[i].opp_known = state[j].position;
        rt[i].opp_vel_est = rt[j].world_velocity;
      } else if (rt[i].belief_ready) {
        rt[i].opp_known = belief_to_world(rt[i].belief, state[i].position, state[i].yaw);
        const Vec2 rel_vel(rt[i].belief.rel_velocity.x(), rt[i].belief.rel_velocity.y());
        rt[i].opp_vel_est = rot2(state[i].yaw) * rel_vel + rt[i].world_velocity;
      }
    }

    // Replanning tick.
    if (tick % replan_ticks == 0) {
      for (int i = 0; i < 2; ++i) {
        PlayerRuntime& r = rt[i];
        const PlayerSetup& setup = *r.setup;
        if (!plans_ahead(setup.kind)) continue;
        GameSnapshot snap;
        snap.track = &track;
        snap.own_start = state[i].position;
        snap.opponent_start = r.opp_known;
        snap.own_config = setup.config;
        snap.opponent_config = setup.planner.opponent_model;
        snap.previous_own = r.prev_own;
        snap.previous_opponent = r.prev_opp;
        const auto t0 = std::chrono::steady_clock::now();
        bool planned = false;
        try {
          if (setup.kind == PlannerKind::gtp) {
            PlanResult res = plan(snap, setup.planner);
            r.prev_own = res.own;
            r.prev_opp = res.predicted_opponent;
            r.plan_strategy = res.own.strategy;
            r.predicted_opponent = res.predicted_opponent.strategy.positions;
            if (res.own.status == SolveStatus::fallback || res.recovered)
              out.violations.push_back({t, i,
                                        res.own.status == SolveStatus::fallback
                                            ? "planner_fallback"
                                            : "planner_recovery",
                                        0.0});
            planned = true;
          } else {
            SolveResult res = mpc_plan(snap, setup.planner.solver);
            r.prev_own = res;
            r.plan_strategy = res.strategy;
            r.predicted_opponent = straight_line_prediction(
                track, r.opp_known, setup.planner.opponent_model.v_max,
                setup.planner.solver.dt, setup.planner.solver.horizon_steps);
            if (res.status == SolveStatus::fallback)
              out.violations.push_back({t, i, "planner_fallback", 0.0});
            planned = true;
          }
        } catch (const std::exception& e) {
          // Keep executing the previous plan; the next replan retries.
          out.violations.push_back({t, i, std::string("planner_error: ") + e.what(), 0.0});
        }
        const auto t1 = std::chrono::steady_clock::now();
        out.plan_seconds[i].push_back(std::chrono::duration<double>(t1 - t0).count());
        if (planned) {
          r.has_plan = true;
          r.plan_t0 = t;
          r.yaw = yaw_plan(r.plan_strategy.positions, r.predicted_opponent,
                           setup.planner.solver.dt, state[i].yaw);
        }
      }
    }

    // Trace sampling (pre-step, includes t = 0).
    if (tick % trace_ticks == 0) {
      for (int i = 0; i < 2; ++i) {
        TraceSample s;
        s.t = t;
        s.player = i;
        s.position = state[i].position;
        s.yaw = state[i].yaw;
        s.tau = state[i].progress.tau;
        s.laps = state[i].progress.laps;
        s.min_separation = out.min_separation;
        out.trace.push_back(s);
      }
    }

    if (tick == max_steps) break;

    // Commands.
    std::array<Commands, 2> cmd;
    for (int i = 0; i < 2; ++i) {
      PlayerRuntime& r = rt[i];
      const PlayerSetup& setup = *r.setup;
      Vec2 v_world = Vec2::Zero();
      double yaw_rate = 0.0;
      if (plans_ahead(setup.kind) && r.has_plan) {
        const double plan_dt = setup.planner.solver.dt;
        int k = static_cast<int>(std::floor((t - r.plan_t0) / plan_dt + 1e-9));
        k = std::clamp(k, 0, r.plan_strategy.horizon() - 1);
        v_world = r.plan_strategy.controls[k] / plan_dt;
        if (v_world.norm() > setup.config.v_max)
          v_world *= setup.config.v_max / v_world.norm();
        if (k < static_cast<int>(r.yaw.rates.size())) yaw_rate = r.yaw.rates[k];
      } else if (setup.kind == PlannerKind::rvo) {
        const RvoAgentState me{state[i].position, r.world_velocity};
        const RvoAgentState other{r.opp_known, r.opp_vel_est};
        v_world = r.rvo->step(me, other, setup.config, setup.planner.opponent_model, dt);
        if (v_world.norm() > 1e-6)
          yaw_rate = wrap_angle(std::atan2(v_world.y(), v_world.x()) - state[i].yaw) / dt;
      }
      r.world_velocity = v_world;
      cmd[i].body_velocity = rot2(-state[i].yaw) * v_world;
      cmd[i].yaw_rate = yaw_rate;
    }

    // Predict the relative-state filters with the commanded body rates.
    if (filtered) {
      for (int i = 0; i < 2; ++i) {
        if (!rt[i].belief_ready) continue;
        rt[i].belief =
            kf_predict(rt[i].belief, Vec3(0, 0, cmd[i].yaw_rate), dt, config.estimator);
      }
    }

    for (int i = 0; i < 2; ++i) state[i] = step(state[i], cmd[i], track, dt);
    t = (tick + 1) * dt;

    // Monitors.
    const double sep = (state[0].position - state[1].position).norm();
    out.min_separation = std::min(out.min_separation, sep);
    if (monitor_sep) {
      const bool violating = sep < d_req - 1e-6;
      if (violating && !in_sep_violation)
        out.violations.push_back({t, -1, "separation", d_req - sep});
      in_sep_violation = violating;
    }
    for (int i = 0; i < 2; ++i) {
      if (rt[i].setup->kind == PlannerKind::parked) continue;
      const double excess =
          corridor_excess(track, state[i].position, state[i].progress.tau);
      out.max_corridor_excess[i] = std::max(out.max_corridor_excess[i], excess);
      if (plans_ahead(rt[i].setup->kind)) {
        const bool violating = excess > 1e-6;
        if (violating && !in_corridor_violation[i])
          out.violations.push_back({t, i, "corridor", excess});
        in_corridor_violation[i] = violating;
      }
    }

    if (state[0].progress.total >= config.finish_total ||
        state[1].progress.total >= config.finish_total) {
      out.winner = state[0].progress.total >= state[1].progress.total ? 0 : 1;
      t = (tick + 1) * dt;
      break;
    }
  }

  out.duration = t;
  out.final_progress = {state[0].progress.total, state[1].progress.total};
  out.final_gap = state[0].progress.total - state[1].progress.total;
  return out;
}

// Campaign --------------------------------------------------------------------

std::vector<std::pair<Vec2, Vec2>> sample_start_pairs(const CampaignConfig& config, int n,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  auto draw = [&rng](const Rect& r) {
    std::uniform_real_distribution<double> ux(r.x_min, r.x_max);
    std::uniform_real_distribution<double> uy(r.y_min, r.y_max);
    const double x = ux(rng);
    const double y = uy(rng);
    return Vec2(x, y);
  };
  std::vector<std::pair<Vec2, Vec2>> pairs;
  pairs.reserve(n);
  long rejections = 0;
  while (static_cast<int>(pairs.size()) < n) {
    const Vec2 fast = draw(config.fast_rect);
    const Vec2 slow = draw(config.slow_rect);
    if ((fast - slow).norm() < config.d_min) {
      if (++rejections >= 100000)
        throw SamplingExhausted("start sampling rejected 1e5 pairs; check the geometry");
      continue;
    }
    pairs.emplace_back(fast, slow);
  }
  return pairs;
}

RaceConfig campaign_race_config(const TrackModel& track, const CampaignConfig& config,
                                const ScenarioSpec& spec, const Vec2& fast_start,
                                const Vec2& slow_start, std::uint64_t seed) {
  RaceConfig rc;
  rc.sim_dt = config.sim_dt;
  rc.replan_period = config.replan_period;
  rc.finish_total = track.total_length() + config.finish_tau;
  rc.max_duration = config.max_duration;
  rc.trace_period = config.trace_period;
  rc.seed = seed;
  rc.estimator_mode = config.estimator_mode;
  rc.estimator = config.estimator;

  auto make_player = [&](PlannerKind kind, double v_max, double opp_v_max, const Vec2& start) {
    PlayerSetup p;
    p.kind = kind;
    p.config.v_max = v_max;
    p.config.d_min = config.d_min;
    p.config.radius = config.body_radius;
    p.config.fov_half_angle = config.fov_half_angle;
    p.planner = config.gtp;
    p.planner.opponent_model = p.config;
    p.planner.opponent_model.v_max = opp_v_max;
    p.rvo = config.rvo;
    p.start = start;
    return p;
  };
  rc.players[0] = make_player(spec.fast_kind, config.fast_v_max, config.slow_v_max, fast_start);
  rc.players[1] = make_player(spec.slow_kind, config.slow_v_max, config.fast_v_max, slow_start);
  return rc;
}

namespace {

double gap_sign_for(const ScenarioSpec& spec) {
  // Positive gap favors the GTP player; with no GTP in the pair, it favors
  // the MPC player. The raw gap is fast minus slow.
  if (spec.fast_kind == PlannerKind::gtp) return +1.0;
  if (spec.slow_kind == PlannerKind::gtp) return -1.0;
  if (spec.fast_kind == PlannerKind::mpc) return +1.0;
  if (spec.slow_kind == PlannerKind::mpc) return -1.0;
  return +1.0;
}

int campaign_threads(const CampaignConfig& config) {
  if (const char* env = std::getenv("DRACE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  if (config.threads > 0) return config.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

CampaignReport run_campaign(const TrackModel& track, const CampaignConfig& config, int n_races,
                            std::uint64_t seed) {
  const auto wall0 = std::chrono::steady_clock::now();
  CampaignReport report;
  report.start_pairs = sample_start_pairs(config, n_races, seed);

  struct Job {
    int scenario;
    int race;
  };
  std::vector<Job> jobs;
  report.scenarios.resize(config.scenarios.size());
  for (size_t s = 0; s < config.scenarios.size(); ++s) {
    report.scenarios[s].spec = config.scenarios[s];
    report.scenarios[s].races.resize(n_races);
    for (int r = 0; r < n_races; ++r) jobs.push_back({static_cast<int>(s), r});
  }

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      const Job job = jobs[idx];
      const ScenarioSpec& spec = config.scenarios[job.scenario];
      const auto& [fast_start, slow_start] = report.start_pairs[job.race];
      const std::uint64_t race_seed = splitmix64(seed ^ (0xABCD1234ULL + job.race));
      const RaceConfig rc =
          campaign_race_config(track, config, spec, fast_start, slow_start, race_seed);
      RaceOutcome outcome = run_race(track, rc);

      RaceRecord rec;
      rec.index = job.race;
      rec.seed = race_seed;
      rec.fast_start = fast_start;
      rec.slow_start = slow_start;
      rec.winner = outcome.winner;
      rec.gap_signed = gap_sign_for(spec) * outcome.final_gap;
      rec.duration = outcome.duration;
      rec.min_separation = outcome.min_separation;
      for (int i = 0; i < 2; ++i) {
        const PlannerKind kind = i == 0 ? spec.fast_kind : spec.slow_kind;
        if (kind == PlannerKind::gtp || kind == PlannerKind::mpc)
          rec.max_corridor_excess =
              std::max(rec.max_corridor_excess, outcome.max_corridor_excess[i]);
        if (kind == PlannerKind::gtp)
          rec.gtp_plan_seconds.insert(rec.gtp_plan_seconds.end(),
                                      outcome.plan_seconds[i].begin(),
                                      outcome.plan_seconds[i].end());
      }
      if (!rec.gtp_plan_seconds.empty()) {
        double sum = 0;
        for (double v : rec.gtp_plan_seconds) sum += v;
        rec.mean_plan_seconds = sum / rec.gtp_plan_seconds.size();
      }
      if (config.keep_traces) rec.trace = std::move(outcome.trace);
      report.scenarios[job.scenario].races[job.race] = std::move(rec);
    }
  };

  const int n_threads = campaign_threads(config);
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (ScenarioReport& sr : report.scenarios) {
    double sum = 0, sum_sq = 0;
    for (const RaceRecord& r : sr.races) {
      if (r.winner == 0)
        sr.wins_fast++;
      else if (r.winner == 1)
        sr.wins_slow++;
      else
        sr.timeouts++;
      sum += r.gap_signed;
      sum_sq += r.gap_signed * r.gap_signed;
    }
    const double n = std::max<size_t>(1, sr.races.size());
    sr.mean_gap_signed = sum / n;
    sr.std_gap_signed = std::sqrt(std::max(0.0, sum_sq / n - sr.mean_gap_signed * sr.mean_gap_signed));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return report;
}

}  // namespace drace
