#include "drace/estimator.hpp"

#include <cmath>

namespace drace {

namespace {

Mat3 rodrigues(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-12) return Mat3::Identity() + skew(axis_angle);
  const Vec3 axis = axis_angle / angle;
  const Mat3 k = skew(axis);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

void symmetrize(Mat6& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

Belief kf_predict(const Belief& belief, const Vec3& body_rates, double dt,
                  const EstimatorParams& params) {
  // Closed-form ZOH of xdot = [[-[w]x, I], [0, -[w]x]] x: both blocks rotate
  // by R = exp(-[w]x dt) and the position picks up dt * velocity before the
  // rotation.
  const Mat3 rot = rodrigues(-body_rates * dt);
  Mat6 f = Mat6::Zero();
  f.topLeftCorner<3, 3>() = rot;
  f.topRightCorner<3, 3>() = dt * rot;
  f.bottomRightCorner<3, 3>() = rot;

  Belief out;
  out.rel_position = rot * (belief.rel_position + dt * belief.rel_velocity);
  out.rel_velocity = rot * belief.rel_velocity;
  out.covariance = f * belief.covariance * f.transpose() + params.process_noise_density() * dt;
  symmetrize(out.covariance);
  return out;
}

UpdateOutcome kf_update(const Belief& belief, const Measurement& meas,
                        const EstimatorParams& params) {
  UpdateOutcome out;
  out.belief = belief;
  const Vec3 innovation = meas.value - belief.rel_position;
  const Mat3 s = belief.covariance.topLeftCorner<3, 3>() + params.r_measurement;
  const Mat3 s_inv = s.inverse();
  out.mahalanobis_sq = innovation.dot(s_inv * innovation);
  if (out.mahalanobis_sq > params.gate_chi2) {
    out.gated = true;
    return out;
  }
  const Eigen::Matrix<double, 6, 3> k = belief.covariance.leftCols<3>() * s_inv;
  const Vec6 mean = belief.mean() + k * innovation;
  Mat6 ikh = Mat6::Identity();
  ikh.leftCols<3>() -= k;
  Mat6 cov = ikh * belief.covariance * ikh.transpose() +
             k * params.r_measurement * k.transpose();
  symmetrize(cov);
  out.belief.rel_position = mean.head<3>();
  out.belief.rel_velocity = mean.tail<3>();
  out.belief.covariance = cov;
  return out;
}

Belief initialize_belief(const Measurement& meas, const EstimatorParams& params,
                         double own_v_max, double opponent_v_max) {
  Belief b;
  b.rel_position = meas.value;
  b.rel_velocity = Vec3::Zero();
  b.covariance = Mat6::Zero();
  b.covariance.topLeftCorner<3, 3>() = params.r_measurement;
  const double v = own_v_max + opponent_v_max;
  b.covariance.bottomRightCorner<3, 3>() = v * v * Mat3::Identity();
  return b;
}

Measurement simulate_measurement(const Vec2& own_position, double own_yaw,
                                 const Vec2& opponent_position, const PlayerConfig& config,
                                 const Mat3& r_measurement, std::mt19937_64& rng,
                                 double timestamp) {
  Measurement m;
  m.timestamp = timestamp;
  const Vec2 rel_world = opponent_position - own_position;
  const Vec2 rel_body2 = rot2(-own_yaw) * rel_world;
  const Vec3 rel_body(rel_body2.x(), rel_body2.y(), 0.0);
  const double dist = rel_body.norm();
  if (dist < 1e-9) return m;
  // Field-of-view gate: bearing within the half-angle of the camera axis.
  if (rel_body.x() / dist < std::cos(config.fov_half_angle)) return m;
  m.valid = true;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::LLT<Mat3> llt(r_measurement);
  const Vec3 noise = llt.matrixL() * Vec3(gauss(rng), gauss(rng), gauss(rng));
  m.value = rel_body + noise;
  return m;
}

Vec2 belief_to_world(const Belief& belief, const Vec2& own_position, double own_yaw) {
  const Vec2 rel(belief.rel_position.x(), belief.rel_position.y());
  return own_position + rot2(own_yaw) * rel;
}

YawPlan yaw_plan(const std::vector<Vec2>& own_positions,
                 const std::vector<Vec2>& opponent_positions, double dt,
                 double current_yaw) {
  const size_t n = std::min(own_positions.size(), opponent_positions.size());
  YawPlan plan;
  plan.angles.resize(n);
  plan.rates.resize(n);
  double prev = current_yaw;
  for (size_t k = 0; k < n; ++k) {
    const Vec2 rel = opponent_positions[k] - own_positions[k];
    const double psi = rel.norm() < 1e-6 ? prev : std::atan2(rel.y(), rel.x());
    plan.angles[k] = psi;
    plan.rates[k] = wrap_angle(psi - prev) / dt;
    prev = psi;
  }
  return plan;
}

}  // namespace drace
