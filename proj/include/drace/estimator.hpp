#pragma once

#include <random>
#include <vector>

#include "drace/geometry.hpp"
#include "drace/trajopt.hpp"

namespace drace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Gaussian belief over the opponent's relative position and velocity,
/// expressed in the own body frame.
struct Belief {
  Vec3 rel_position = Vec3::Zero();
  Vec3 rel_velocity = Vec3::Zero();
  Mat6 covariance = Mat6::Identity();

  Vec6 mean() const {
    Vec6 x;
    x << rel_position, rel_velocity;
    return x;
  }
};

struct Measurement {
  Vec3 value = Vec3::Zero();  // body-frame relative position
  double timestamp = 0.0;
  bool valid = false;
};

struct EstimatorParams {
  Mat3 q_position = 1e-4 * Mat3::Identity();  // process noise density, position block (1/s)
  Mat3 q_velocity = 1e-2 * Mat3::Identity();  // process noise density, velocity block (1/s)
  Mat3 r_measurement = 0.05 * 0.05 * Mat3::Identity();
  double measurement_rate_hz = 15.0;
  double gate_chi2 = 13.8;  // chi-square(3) gate on the innovation

  Mat6 process_noise_density() const {
    Mat6 q = Mat6::Zero();
    q.topLeftCorner<3, 3>() = q_position;
    q.bottomRightCorner<3, 3>() = q_velocity;
    return q;
  }
};

/// Zero-order-hold propagation of the relative-state dynamics under the own
/// body rates: both blocks rotate by exp(-[w]x dt), position integrates
/// velocity. Covariance inflated by Q * dt.
Belief kf_predict(const Belief& belief, const Vec3& body_rates, double dt,
                  const EstimatorParams& params);

struct UpdateOutcome {
  Belief belief;
  bool gated = false;  // measurement rejected by the innovation gate
  double mahalanobis_sq = 0.0;
};

/// Joseph-form position update (H = [I 0]); skips the update and flags it when
/// the innovation fails the chi-square gate.
UpdateOutcome kf_update(const Belief& belief, const Measurement& meas,
                        const EstimatorParams& params);

/// First-measurement initialization: position from the measurement, zero
/// velocity, variances from R and the combined speed limits.
Belief initialize_belief(const Measurement& meas, const EstimatorParams& params,
                         double own_v_max, double opponent_v_max);

/// Synthetic camera: body-frame relative position of the opponent, valid iff
/// it passes the field-of-view gate, with additive Gaussian noise.
Measurement simulate_measurement(const Vec2& own_position, double own_yaw,
                                 const Vec2& opponent_position, const PlayerConfig& config,
                                 const Mat3& r_measurement, std::mt19937_64& rng,
                                 double timestamp = 0.0);

/// World-frame opponent position estimate (planar components).
Vec2 belief_to_world(const Belief& belief, const Vec2& own_position, double own_yaw);

struct YawPlan {
  std::vector<double> angles;  // psi_1..psi_N
  std::vector<double> rates;   // omega_1..omega_N
};

/// Yaw schedule aligning the camera axis with the planned relative bearing at
/// every step. Rates by wrapped finite differences; a degenerate bearing
/// (coincident positions) holds the previous angle.
YawPlan yaw_plan(const std::vector<Vec2>& own_positions,
                 const std::vector<Vec2>& opponent_positions, double dt,
                 double current_yaw);

}  // namespace drace
