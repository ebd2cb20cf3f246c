#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "drace/baselines.hpp"
#include "drace/estimator.hpp"
#include "drace/game_planner.hpp"
#include "drace/track.hpp"

namespace drace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PlannerKind { gtp, mpc, rvo, parked };
enum class EstimatorMode { perfect, filtered };

std::string to_string(PlannerKind kind);
PlannerKind planner_kind_from_string(const std::string& s);

struct RobotState {
  Vec2 position = Vec2::Zero();
  double yaw = 0.0;
  Vec2 body_velocity = Vec2::Zero();  // commanded, body frame
  double yaw_rate = 0.0;              // commanded
  ProgressState progress;
};

struct Commands {
  Vec2 body_velocity = Vec2::Zero();
  double yaw_rate = 0.0;
};

/// Euler step of the kinematic model: world velocity is the body command
/// rotated by the current yaw; yaw integrates the rate (wrapped); progress
/// tracking follows the position.
RobotState step(const RobotState& state, const Commands& commands, const TrackModel& track,
                double dt);

struct PlayerSetup {
  PlannerKind kind = PlannerKind::gtp;
  PlayerConfig config;
  PlannerParams planner;
  RvoParams rvo;
  Vec2 start = Vec2::Zero();
};

struct RaceConfig {
  std::array<PlayerSetup, 2> players;
  double sim_dt = 0.01;
  double replan_period = 0.05;
  double finish_total = 0.0;  // progress total that ends the race
  double max_duration = 240.0;
  std::uint64_t seed = 0;
  EstimatorMode estimator_mode = EstimatorMode::perfect;
  EstimatorParams estimator;
  double trace_period = 0.1;
};

struct TraceSample {
  double t = 0.0;
  int player = 0;
  Vec2 position = Vec2::Zero();
  double yaw = 0.0;
  double tau = 0.0;
  int laps = 0;
  double min_separation = 0.0;  // running minimum up to t
};

struct ViolationEvent {
  double t = 0.0;
  int player = -1;  // -1 for joint (separation) events
  std::string what;
  double amount = 0.0;
};

struct RaceOutcome {
  int winner = -1;  // player index, or -1 on timeout
  double final_gap = 0.0;  // progress player 0 minus player 1 at race end
  double duration = 0.0;
  double min_separation = 0.0;
  std::array<double, 2> final_progress{0.0, 0.0};
  std::array<double, 2> max_corridor_excess{0.0, 0.0};
  std::array<std::vector<double>, 2> plan_seconds;  // wall time per replan
  std::array<int, 2> fov_attempts{0, 0};
  std::array<int, 2> fov_passes{0, 0};
  std::vector<TraceSample> trace;
  std::vector<ViolationEvent> violations;
};

/// Run one race to the finish line or the duration cap. Deterministic for a
/// given config and seed. Throws ConfigError on invalid starts.
RaceOutcome run_race(const TrackModel& track, const RaceConfig& config);

// Campaign runner ------------------------------------------------------------

struct ScenarioSpec {
  std::string name;
  PlannerKind fast_kind = PlannerKind::gtp;
  PlannerKind slow_kind = PlannerKind::mpc;
};

struct Rect {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
};

struct CampaignConfig {
  double fast_v_max = 0.6;
  double slow_v_max = 0.5;
  double d_min = 0.8;
  double body_radius = 0.3;
  double fov_half_angle = M_PI / 4.0;
  PlannerParams gtp;      // solver block shared with the MPC baseline
  RvoParams rvo;
  Rect fast_rect{-0.1, 1.5, -0.7, 0.7};
  Rect slow_rect{1.6, 1.7, -0.7, 0.7};
  double finish_tau = 0.0;
  double sim_dt = 0.01;
  double replan_period = 0.05;
  double max_duration = 240.0;
  double trace_period = 0.1;
  EstimatorMode estimator_mode = EstimatorMode::perfect;
  EstimatorParams estimator;
  std::vector<ScenarioSpec> scenarios;
  int threads = 0;  // 0 = hardware concurrency (or DRACE_THREADS)
  bool keep_traces = false;
};

struct RaceRecord {
  int index = 0;
  std::uint64_t seed = 0;
  Vec2 fast_start = Vec2::Zero();
  Vec2 slow_start = Vec2::Zero();
  int winner = -1;          // 0 = fast player, 1 = slow player, -1 = timeout
  double gap_signed = 0.0;  // positive favors GTP (or MPC when no GTP runs)
  double duration = 0.0;
  double min_separation = 0.0;
  double max_corridor_excess = 0.0;  // over gtp/mpc players only
  double mean_plan_seconds = 0.0;    // over gtp players, 0 if none
  std::vector<double> gtp_plan_seconds;
  std::vector<TraceSample> trace;  // only kept when CampaignConfig::keep_traces
};

struct ScenarioReport {
  ScenarioSpec spec;
  std::vector<RaceRecord> races;
  int wins_fast = 0;
  int wins_slow = 0;
  int timeouts = 0;
  double mean_gap_signed = 0.0;
  double std_gap_signed = 0.0;
};

struct CampaignReport {
  std::vector<std::pair<Vec2, Vec2>> start_pairs;  // shared across scenarios
  std::vector<ScenarioReport> scenarios;
  double wall_seconds = 0.0;
};

struct SamplingExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sample fast/slow start pairs uniformly from the configured rectangles,
/// rejecting pairs closer than the separation limit. Throws SamplingExhausted
/// after 1e5 rejections.
std::vector<std::pair<Vec2, Vec2>> sample_start_pairs(const CampaignConfig& config, int n,
                                                      std::uint64_t seed);

/// Run every scenario over the same n sampled initial conditions. Races run
/// in parallel; results merge deterministically by race index.
CampaignReport run_campaign(const TrackModel& track, const CampaignConfig& config, int n_races,
                            std::uint64_t seed);

/// Per-race RaceConfig of one campaign scenario (exposed for tests).
RaceConfig campaign_race_config(const TrackModel& track, const CampaignConfig& config,
                                const ScenarioSpec& spec, const Vec2& fast_start,
                                const Vec2& slow_start, std::uint64_t seed);

}  // namespace drace
