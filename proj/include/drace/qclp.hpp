#pragma once

#include <vector>

#include "drace/geometry.hpp"

namespace drace {

/// One linear constraint a^T p_k <= b on the k-th planned position (1-based).
struct HalfPlane {
  int k = 1;
  Vec2 a = Vec2::Zero();
  double b = 0.0;
};

/// Convex subproblem of the sequential scheme: maximize a linear function of
/// the positions subject to half-planes on positions and per-step norm balls
/// on the controls. Positions are eliminated through the integrator dynamics
/// p_k = p_{k-1} + u_k, so the decision variables are the N controls.
struct QclpProblem {
  Vec2 start = Vec2::Zero();
  int horizon = 0;
  double u_max = 0.0;
  std::vector<Vec2> objective;  // size N; coefficient on p_k, maximized
  std::vector<HalfPlane> planes;
  /// The first n_soft planes are exact-penalty constraints: their multipliers
  /// are capped at soft_cap, so an infeasible instance yields the
  /// least-violation optimum instead of failing. With the cap above the true
  /// multiplier the solution of a feasible instance is unchanged.
  int n_soft = 0;
  double soft_cap = 50.0;
};

struct QclpParams {
  double tol = 1e-6;  // infinity-norm KKT tolerance
  int max_outer = 200;
  int max_inner = 400;
  double rho0 = 10.0;
  double rho_growth = 5.0;
  double rho_max = 1e8;
};

enum class QclpStatus { ok, failure };

struct QclpResult {
  QclpStatus status = QclpStatus::failure;
  std::vector<Vec2> controls;
  std::vector<Vec2> positions;
  double objective = 0.0;
  Eigen::VectorXd plane_multipliers;  // one per half-plane, >= 0
  Eigen::VectorXd ball_multipliers;   // one per step, >= 0
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct QclpWarmStart {
  Eigen::VectorXd u;   // stacked controls, size 2N
  Eigen::VectorXd mu;  // plane multipliers
};

/// Augmented-Lagrangian solve: dual ascent on the half-plane constraints with
/// accelerated projected-gradient inner iterations (exact ball projection).
/// Returns status failure when the KKT residual cannot be brought under
/// params.tol within the iteration budget (e.g. an infeasible instance).
QclpResult solve_qclp(const QclpProblem& problem, const QclpParams& params = {},
                      const QclpWarmStart* warm = nullptr);

}  // namespace drace
