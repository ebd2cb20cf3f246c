#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "drace/estimator.hpp"

using namespace drace;

namespace {

bool positive_definite(const Mat6& m) {
  return Eigen::LLT<Mat6>(m).info() == Eigen::Success;
}

double symmetry_error(const Mat6& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("predict with zero rates is a pure integrator") {
  Belief b;
  b.rel_position = Vec3(1.0, -0.5, 0.2);
  b.rel_velocity = Vec3(0.3, 0.1, -0.2);
  EstimatorParams params;
  const Belief next = kf_predict(b, Vec3::Zero(), 0.1, params);
  CHECK((next.rel_position - (b.rel_position + 0.1 * b.rel_velocity)).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK((next.rel_velocity - b.rel_velocity).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(symmetry_error(next.covariance) <= 1e-12);
  CHECK(positive_definite(next.covariance));
}

TEST_CASE("predict rotates by -w dt about body z") {
  Belief b;
  b.rel_position = Vec3(1.0, 0.0, 0.0);
  b.rel_velocity = Vec3::Zero();
  EstimatorParams params;
  const double w = 0.7, dt = 0.05;
  const Belief next = kf_predict(b, Vec3(0, 0, w), dt, params);
  const double ang = -w * dt;
  const Vec3 expected(std::cos(ang), std::sin(ang), 0.0);
  CHECK((next.rel_position - expected).norm() <= 1e-9);
}

TEST_CASE("covariance trace grows under prediction with nonzero Q") {
  Belief b;
  EstimatorParams params;
  const Belief next = kf_predict(b, Vec3(0.1, -0.2, 0.5), 0.01, params);
  CHECK(next.covariance.trace() > b.covariance.trace());
}

TEST_CASE("update drives the mean to the measurement as R vanishes") {
  Belief b;
  b.rel_position = Vec3(1.0, 1.0, 0.0);
  EstimatorParams params;
  params.r_measurement = 1e-12 * Mat3::Identity();
  Measurement m;
  m.valid = true;
  m.value = Vec3(2.0, 0.5, -0.3);
  const UpdateOutcome out = kf_update(b, m, params);
  REQUIRE_FALSE(out.gated);
  CHECK((out.belief.rel_position - m.value).norm() <= 1e-6);
  CHECK(positive_definite(out.belief.covariance));
}

TEST_CASE("update with the prior mean shrinks the covariance only") {
  Belief b;
  b.rel_position = Vec3(0.4, -0.2, 0.1);
  EstimatorParams params;
  Measurement m;
  m.valid = true;
  m.value = b.rel_position;
  const UpdateOutcome out = kf_update(b, m, params);
  REQUIRE_FALSE(out.gated);
  CHECK((out.belief.rel_position - b.rel_position).norm() <= 1e-12);
  CHECK(out.belief.covariance.trace() < b.covariance.trace());
  CHECK(symmetry_error(out.belief.covariance) <= 1e-12);
}

TEST_CASE("innovation gate rejects outliers and flags them") {
  Belief b;
  b.covariance = 0.01 * Mat6::Identity();
  EstimatorParams params;
  Measurement m;
  m.valid = true;
  m.value = Vec3(50.0, 0.0, 0.0);
  const UpdateOutcome out = kf_update(b, m, params);
  CHECK(out.gated);
  CHECK((out.belief.mean() - b.mean()).norm() == 0.0);
}

TEST_CASE("filter matches an independent per-axis implementation") {
  // With zero rates and diagonal noise the 6-state filter decouples into
  // three scalar position/velocity filters; cross-check against one coded
  // from scratch.
  EstimatorParams params;
  params.q_position = 1e-4 * Mat3::Identity();
  params.q_velocity = 1e-2 * Mat3::Identity();
  params.r_measurement = 0.0025 * Mat3::Identity();
  params.gate_chi2 = 1e18;

  Belief b;
  b.rel_position = Vec3(0.5, -1.0, 2.0);
  b.rel_velocity = Vec3(0.1, 0.0, -0.3);

  struct Axis {
    double p, v;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  };
  Axis axes[3];
  for (int a = 0; a < 3; ++a) {
    axes[a].p = b.rel_position[a];
    axes[a].v = b.rel_velocity[a];
  }

  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt = 0.01;
  for (int step = 0; step < 100; ++step) {
    b = kf_predict(b, Vec3::Zero(), dt, params);
    for (int a = 0; a < 3; ++a) {
      Eigen::Matrix2d f;
      f << 1, dt, 0, 1;
      Eigen::Matrix2d q;
      q << 1e-4 * dt, 0, 0, 1e-2 * dt;
      const Eigen::Vector2d x = f * Eigen::Vector2d(axes[a].p, axes[a].v);
      axes[a].p = x[0];
      axes[a].v = x[1];
      axes[a].cov = f * axes[a].cov * f.transpose() + q;
    }
    if (step % 7 == 0) {
      Measurement m;
      m.valid = true;
      m.value = Vec3(gauss(rng), gauss(rng), gauss(rng));
      b = kf_update(b, m, params).belief;
      for (int a = 0; a < 3; ++a) {
        const Eigen::Vector2d h(1, 0);
        const double s = axes[a].cov(0, 0) + 0.0025;
        const Eigen::Vector2d k = axes[a].cov.col(0) / s;
        const double innov = m.value[a] - axes[a].p;
        axes[a].p += k[0] * innov;
        axes[a].v += k[1] * innov;
        const Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity() - k * h.transpose();
        axes[a].cov = ikh * axes[a].cov * ikh.transpose() + k * 0.0025 * k.transpose();
      }
    }
    for (int a = 0; a < 3; ++a) {
      CHECK(b.rel_position[a] == doctest::Approx(axes[a].p).epsilon(1e-9));
      CHECK(b.rel_velocity[a] == doctest::Approx(axes[a].v).epsilon(1e-9));
      CHECK(b.covariance(a, a) == doctest::Approx(axes[a].cov(0, 0)).epsilon(1e-9));
      CHECK(b.covariance(a + 3, a + 3) == doctest::Approx(axes[a].cov(1, 1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("synthetic measurement respects the field-of-view gate") {
  PlayerConfig cfg;
  cfg.fov_half_angle = M_PI / 4.0;
  std::mt19937_64 rng(1);
  const Mat3 r = 0.0025 * Mat3::Identity();

  SUBCASE("opponent on the camera axis is visible at any distance") {
    for (double d : {0.2, 1.0, 25.0}) {
      const Measurement m =
          simulate_measurement(Vec2(0, 0), 0.0, Vec2(d, 0), cfg, r, rng);
      CHECK(m.valid);
    }
  }
  SUBCASE("opponent just past the half-angle is invisible") {
    const double ang = M_PI / 4.0 + 0.01;
    const Measurement m = simulate_measurement(Vec2(0, 0), 0.0,
                                               2.0 * Vec2(std::cos(ang), std::sin(ang)), cfg,
                                               r, rng);
    CHECK_FALSE(m.valid);
  }
  SUBCASE("gate follows the body yaw") {
    const Measurement m =
        simulate_measurement(Vec2(0, 0), M_PI / 2.0, Vec2(0, 3.0), cfg, r, rng);
    CHECK(m.valid);
    CHECK(m.value.x() == doctest::Approx(3.0).epsilon(0.1));
  }
  SUBCASE("noise statistics match R") {
    const int n = 10000;
    Mat3 sum = Mat3::Zero();
    for (int i = 0; i < n; ++i) {
      const Measurement m = simulate_measurement(Vec2(0, 0), 0.0, Vec2(2, 0), cfg, r, rng);
      const Vec3 e = m.value - Vec3(2, 0, 0);
      sum += e * e.transpose();
    }
    const Mat3 sample = sum / n;
    for (int i = 0; i < 3; ++i)
      CHECK(sample(i, i) == doctest::Approx(0.0025).epsilon(0.05));
  }
}

TEST_CASE("belief maps to world coordinates") {
  Belief b;
  b.rel_position = Vec3(1.0, 0.0, 0.0);
  SUBCASE("identity yaw") {
    const Vec2 w = belief_to_world(b, Vec2(2, 3), 0.0);
    CHECK(w.x() == doctest::Approx(3.0));
    CHECK(w.y() == doctest::Approx(3.0));
  }
  SUBCASE("quarter turn") {
    const Vec2 w = belief_to_world(b, Vec2(0, 0), M_PI / 2.0);
    CHECK(w.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w.y() == doctest::Approx(1.0));
  }
  SUBCASE("world-body round trip is the identity") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
      const Vec2 own(u(rng), u(rng));
      const double yaw = u(rng);
      const Vec2 opp(u(rng), u(rng));
      const Vec2 rel = rot2(-yaw) * (opp - own);
      Belief belief;
      belief.rel_position = Vec3(rel.x(), rel.y(), 0.0);
      CHECK((belief_to_world(belief, own, yaw) - opp).norm() <= 1e-12);
    }
  }
}

TEST_CASE("yaw plan points at the opponent") {
  SUBCASE("cardinal bearings") {
    const YawPlan p1 = yaw_plan({Vec2(0, 0)}, {Vec2(1, 0)}, 0.1, 0.0);
    CHECK(p1.angles[0] == doctest::Approx(0.0));
    const YawPlan p2 = yaw_plan({Vec2(0, 0)}, {Vec2(0, 1)}, 0.1, 0.0);
    CHECK(p2.angles[0] == doctest::Approx(M_PI / 2));
  }
  SUBCASE("rates are wrapped finite differences across the branch cut") {
    std::vector<Vec2> own, opp;
    const double dt = 0.1;
    for (int k = 0; k < 20; ++k) {
      // Bearing sweeps through +-pi at a constant 0.3 rad per step.
      const double ang = M_PI - 0.15 + 0.3 * k;
      own.push_back(Vec2::Zero());
      opp.push_back(Vec2(std::cos(ang), std::sin(ang)));
    }
    const YawPlan p = yaw_plan(own, opp, dt, M_PI - 0.45);
    for (size_t k = 0; k < p.rates.size(); ++k) {
      CHECK(std::abs(p.rates[k]) <= M_PI / dt + 1e-9);
      CHECK(p.rates[k] == doctest::Approx(0.3 / dt).epsilon(1e-9));
    }
  }
  SUBCASE("degenerate bearing holds the previous angle") {
    const YawPlan p = yaw_plan({Vec2(1, 1)}, {Vec2(1, 1)}, 0.1, 0.7);
    CHECK(p.angles[0] == doctest::Approx(0.7));
    CHECK(p.rates[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("NEES consistency over a 20-run Monte Carlo") {
  EstimatorParams params;
  params.gate_chi2 = 1e18;
  const Mat6 q = params.process_noise_density();
  const double dt = 0.01;
  const int steps = 400;
  std::mt19937_64 rng(20240901);
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
  long count = 0;
  for (int run = 0; run < 20; ++run) {
    Vec6 noise;
    for (int i = 0; i < 6; ++i) noise[i] = gauss(rng);
    Vec6 truth = mean0 + chol_p0.matrixL() * noise;
    Belief belief;
    belief.rel_position = mean0.head<3>();
    belief.rel_velocity = mean0.tail<3>();
    belief.covariance = p0;
    for (int k = 0; k < steps; ++k) {
      const double t = k * dt;
      const Vec3 w(0.15 * std::sin(0.9 * t + run), -0.1 * std::cos(0.7 * t),
                   0.8 * std::sin(0.5 * t + run));
      Belief carrier;
      carrier.rel_position = truth.head<3>();
      carrier.rel_velocity = truth.tail<3>();
      const Belief propagated = kf_predict(carrier, w, dt, params);
      for (int i = 0; i < 6; ++i) noise[i] = gauss(rng);
      truth.head<3>() = propagated.rel_position;
      truth.tail<3>() = propagated.rel_velocity;
      truth += chol_q.matrixL() * noise;

      belief = kf_predict(belief, w, dt, params);
      REQUIRE(positive_definite(belief.covariance));
      if ((k + 1) % 7 == 0) {
        Measurement m;
        m.valid = true;
        m.value = truth.head<3>() + chol_r.matrixL() * Vec3(gauss(rng), gauss(rng), gauss(rng));
        belief = kf_update(belief, m, params).belief;
        REQUIRE(positive_definite(belief.covariance));
      }
      const Vec6 err = belief.mean() - truth;
      nees_sum += err.dot(belief.covariance.ldlt().solve(err));
      ++count;
    }
  }
  const double nees = nees_sum / count;
  // chi-square(6) band for a 20-run average.
  CHECK(nees >= 91.573 / 20.0);
  CHECK(nees <= 152.211 / 20.0);
}
