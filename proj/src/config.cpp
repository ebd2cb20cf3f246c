#include "drace/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace drace {

namespace {

using nlohmann::json;

double get_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

int get_or(const json& j, const char* key, int fallback) {
  return j.contains(key) ? j.at(key).get<int>() : fallback;
}

void parse_solver(const json& j, SolverParams& p) {
  p.horizon_steps = get_or(j, "horizon_steps", p.horizon_steps);
  p.dt = get_or(j, "dt", p.dt);
  p.inner_tol = get_or(j, "inner_tol", p.inner_tol);
  p.max_inner = get_or(j, "max_inner", p.max_inner);
  p.alm_tol = get_or(j, "alm_tol", p.alm_tol);
  p.alm_max_iters = get_or(j, "alm_max_iters", p.alm_max_iters);
}

void parse_rvo(const json& j, RvoParams& p) {
  p.rho = get_or(j, "rho", p.rho);
  p.time_horizon = get_or(j, "time_horizon", p.time_horizon);
  p.obstacle_time_horizon = get_or(j, "obstacle_time_horizon", p.obstacle_time_horizon);
  p.polygon_resolution = get_or(j, "polygon_resolution", p.polygon_resolution);
  p.wall_margin = get_or(j, "wall_margin", p.wall_margin);
}

PlayerSetup parse_player(const json& j) {
  PlayerSetup p;
  p.kind = planner_kind_from_string(j.at("planner").get<std::string>());
  p.config.v_max = get_or(j, "v_max", p.config.v_max);
  p.config.d_min = get_or(j, "d_min", p.config.d_min);
  p.config.radius = get_or(j, "radius", p.config.radius);
  if (j.contains("fov_deg")) p.config.fov_half_angle = j.at("fov_deg").get<double>() * M_PI / 180.0;
  p.planner.alpha = get_or(j, "alpha", p.planner.alpha);
  p.planner.ibr_iterations = get_or(j, "ibr_iterations", p.planner.ibr_iterations);
  parse_solver(j, p.planner.solver);
  if (j.contains("solver")) parse_solver(j.at("solver"), p.planner.solver);
  p.planner.opponent_model = p.config;
  p.planner.opponent_model.v_max = get_or(j, "opponent_v_max", p.config.v_max);
  p.planner.opponent_model.d_min = get_or(j, "opponent_d_min", p.config.d_min);
  if (j.contains("rvo")) parse_rvo(j.at("rvo"), p.rvo);
  if (j.contains("start")) {
    p.start = Vec2(j.at("start").at(0).get<double>(), j.at("start").at(1).get<double>());
  }
  return p;
}

void parse_estimator(const json& j, EstimatorParams& p) {
  if (j.contains("q_pos")) p.q_position = j.at("q_pos").get<double>() * Mat3::Identity();
  if (j.contains("q_vel")) p.q_velocity = j.at("q_vel").get<double>() * Mat3::Identity();
  if (j.contains("r_meas")) p.r_measurement = j.at("r_meas").get<double>() * Mat3::Identity();
  p.measurement_rate_hz = get_or(j, "meas_rate_hz", p.measurement_rate_hz);
  p.gate_chi2 = get_or(j, "gate_chi2", p.gate_chi2);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
}

TrackModel load_referenced_track(const json& j, const std::string& scenario_path) {
  const std::string track_ref = j.at("track").get<std::string>();
  namespace fs = std::filesystem;
  fs::path p(track_ref);
  if (!p.is_absolute()) {
    const fs::path rel = fs::path(scenario_path).parent_path() / p;
    if (fs::exists(rel)) p = rel;
  }
  return load_track(p.string());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

CampaignConfig paper_campaign_defaults() {
  CampaignConfig c;
  c.fast_v_max = 0.6;
  c.slow_v_max = 0.5;
  c.d_min = 0.8;
  c.body_radius = 0.3;
  c.fov_half_angle = M_PI / 4.0;
  c.gtp.alpha = 1.0;
  c.gtp.ibr_iterations = 3;
  c.gtp.solver.horizon_steps = 20;
  c.gtp.solver.dt = 0.2;
  c.fast_rect = {-0.1, 1.5, -0.7, 0.7};
  c.slow_rect = {1.6, 1.7, -0.7, 0.7};
  c.finish_tau = 2.32 + 4.5;  // arc length of x = 2.32 m on the main straight
  c.sim_dt = 0.01;
  c.replan_period = 0.05;
  c.max_duration = 240.0;
  c.scenarios = {
      {"a", PlannerKind::gtp, PlannerKind::mpc}, {"b", PlannerKind::mpc, PlannerKind::gtp},
      {"c", PlannerKind::gtp, PlannerKind::rvo}, {"d", PlannerKind::rvo, PlannerKind::gtp},
      {"e", PlannerKind::mpc, PlannerKind::rvo}, {"f", PlannerKind::rvo, PlannerKind::mpc},
  };
  return c;
}

RaceScenario load_race_scenario(const std::string& path) {
  const json j = load_json_file(path);
  RaceScenario s{load_referenced_track(j, path), {}};
  try {
    const auto& players = j.at("players");
    if (players.size() != 2) throw ConfigError("race scenario needs exactly two players");
    s.config.players[0] = parse_player(players.at(0));
    s.config.players[1] = parse_player(players.at(1));
    s.config.sim_dt = get_or(j, "sim_dt", s.config.sim_dt);
    s.config.replan_period = get_or(j, "replan_period", s.config.replan_period);
    s.config.max_duration = get_or(j, "max_duration", s.config.max_duration);
    s.config.trace_period = get_or(j, "trace_period", s.config.trace_period);
    s.config.seed = static_cast<std::uint64_t>(get_or(j, "seed", 0));
    if (j.contains("finish_tau"))
      s.config.finish_total = s.track.total_length() + j.at("finish_tau").get<double>();
    else
      s.config.finish_total = get_or(j, "finish_total", 2.0 * s.track.total_length());
    if (j.contains("estimator_mode"))
      s.config.estimator_mode = j.at("estimator_mode").get<std::string>() == "filtered"
                                    ? EstimatorMode::filtered
                                    : EstimatorMode::perfect;
    if (j.contains("estimator")) parse_estimator(j.at("estimator"), s.config.estimator);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("race scenario field error: ") + e.what());
  }
  return s;
}

CampaignScenario load_campaign_scenario(const std::string& path) {
  const json j = load_json_file(path);
  CampaignScenario s{load_referenced_track(j, path), paper_campaign_defaults()};
  CampaignConfig& c = s.config;
  try {
    c.fast_v_max = get_or(j, "fast_v_max", c.fast_v_max);
    c.slow_v_max = get_or(j, "slow_v_max", c.slow_v_max);
    c.d_min = get_or(j, "d_min", c.d_min);
    c.body_radius = get_or(j, "body_radius", c.body_radius);
    if (j.contains("fov_deg")) c.fov_half_angle = j.at("fov_deg").get<double>() * M_PI / 180.0;
    c.finish_tau = get_or(j, "finish_tau", c.finish_tau);
    c.sim_dt = get_or(j, "sim_dt", c.sim_dt);
    c.replan_period = get_or(j, "replan_period", c.replan_period);
    c.max_duration = get_or(j, "max_duration", c.max_duration);
    c.trace_period = get_or(j, "trace_period", c.trace_period);
    if (j.contains("gtp")) {
      const json& g = j.at("gtp");
      c.gtp.alpha = get_or(g, "alpha", c.gtp.alpha);
      c.gtp.ibr_iterations = get_or(g, "ibr_iterations", c.gtp.ibr_iterations);
      parse_solver(g, c.gtp.solver);
    }
    if (j.contains("rvo")) parse_rvo(j.at("rvo"), c.rvo);
    auto parse_rect = [](const json& r) {
      return Rect{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                  r.at(3).get<double>()};
    };
    if (j.contains("sampling")) {
      c.fast_rect = parse_rect(j.at("sampling").at("fast_rect"));
      c.slow_rect = parse_rect(j.at("sampling").at("slow_rect"));
    }
    if (j.contains("estimator_mode"))
      c.estimator_mode = j.at("estimator_mode").get<std::string>() == "filtered"
                             ? EstimatorMode::filtered
                             : EstimatorMode::perfect;
    if (j.contains("estimator")) parse_estimator(j.at("estimator"), c.estimator);
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      for (const auto& sj : j.at("scenarios")) {
        ScenarioSpec spec;
        spec.name = sj.at("name").get<std::string>();
        spec.fast_kind = planner_kind_from_string(sj.at("fast").get<std::string>());
        spec.slow_kind = planner_kind_from_string(sj.at("slow").get<std::string>());
        c.scenarios.push_back(spec);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("campaign scenario field error: ") + e.what());
  }
  return s;
}

void write_trace_csv(const RaceOutcome& outcome, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace file: " + path);
  out << "time,player,x,y,yaw,tau,laps,min_sep\n";
  for (const TraceSample& s : outcome.trace) {
    out << fmt(s.t) << ',' << s.player << ',' << fmt(s.position.x()) << ','
        << fmt(s.position.y()) << ',' << fmt(s.yaw) << ',' << fmt(s.tau) << ',' << s.laps << ','
        << fmt(s.min_separation) << '\n';
  }
}

void write_scenario_gaps_csv(const ScenarioReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write gap file: " + path);
  out << "race,seed,winner,gap_signed,duration,min_separation\n";
  for (const RaceRecord& r : report.races) {
    out << r.index << ',' << r.seed << ','
        << (r.winner < 0 ? "timeout" : (r.winner == 0 ? "fast" : "slow")) << ','
        << fmt(r.gap_signed) << ',' << fmt(r.duration) << ',' << fmt(r.min_separation) << '\n';
  }
}

void write_campaign_summary_json(const CampaignReport& report, int n_races, std::uint64_t seed,
                                 const std::string& path) {
  json j;
  j["n_races"] = n_races;
  j["seed"] = seed;
  j["scenarios"] = json::array();
  for (const ScenarioReport& sr : report.scenarios) {
    json s;
    s["name"] = sr.spec.name;
    s["fast"] = to_string(sr.spec.fast_kind);
    s["slow"] = to_string(sr.spec.slow_kind);
    s["wins_fast"] = sr.wins_fast;
    s["wins_slow"] = sr.wins_slow;
    s["timeouts"] = sr.timeouts;
    const double n = std::max<size_t>(1, sr.races.size());
    s["win_rate_fast"] = sr.wins_fast / n;
    s["win_rate_slow"] = sr.wins_slow / n;
    s["gap_mean"] = sr.mean_gap_signed;
    s["gap_std"] = sr.std_gap_signed;
    j["scenarios"].push_back(s);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write summary file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace drace
