#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drace/qclp.hpp"
#include "drace/race_sim.hpp"
#include "drace/track.hpp"
#include "drace/trajopt.hpp"

namespace drace::verify {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Brute-force projection oracle: nearest of a dense polyline sampling of the
/// center line. Independent of the closed-form projection path.
class PolylineOracle {
 public:
  PolylineOracle(const TrackModel& track, int samples = 1000000);
  double tau(const Vec2& p) const;
  double distance(const Vec2& p) const;

 private:
  std::vector<Vec2> points_;
  double step_;
};

/// Exhaustive control-grid maximizer for two-step problems, with local grid
/// refinement around the incumbent. Used as the optimality oracle; shares no
/// code with the solver.
struct GridSolution {
  bool feasible = false;
  double objective = 0.0;
  std::vector<Vec2> controls;
};

GridSolution qclp_grid_oracle(const QclpProblem& problem, int points_per_axis = 41,
                              int refine_levels = 3);

GridSolution best_response_grid_oracle(const TrackModel& track, const PlayerConfig& config,
                                       const Vec2& start, const std::vector<Vec2>& opponent,
                                       double dt, int points_per_axis = 41,
                                       int refine_levels = 3);

// Acceptance checks. Each prints nothing; the caller renders pass/fail lines.
Check check_sensitivity_formula(std::uint64_t seed);   // finite differences of tau
Check check_lemma1(std::uint64_t seed);                // multiplier-predicted return change
Check check_solver_optimality(std::uint64_t seed);     // grid oracle comparison
Check check_theorem1(std::uint64_t seed);              // IBR convergence + Nash residual
Check check_alpha_zero_reduction(std::uint64_t seed);  // GTP(alpha=0) == MPC
Check check_estimator_consistency(std::uint64_t seed); // NEES band + FOV maintenance
Check check_hardware_preset(const std::string& scenario_path);

/// Runs the desk-scale campaign once and evaluates the outcome statistics,
/// the real-time budget, and the safety margins.
std::vector<Check> check_campaign(const TrackModel& track, int n_races, std::uint64_t seed);

/// Print one line per check; returns the number of failures.
int report(const std::vector<Check>& checks, std::ostream& os);

}  // namespace drace::verify
