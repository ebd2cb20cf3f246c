#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "drace/geometry.hpp"

namespace drace {

struct TrackError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Projection target is not unique (point at an arc center, no hint given).
struct AmbiguousProjection : TrackError {
  using TrackError::TrackError;
};

/// Progress-sensitivity denominator vanishes (point at a center of curvature).
struct SingularProjection : TrackError {
  using TrackError::TrackError;
};

/// One primitive of the center-line chain. Lines have zero curvature; arcs
/// have signed curvature (positive = turning left).
struct Segment {
  enum class Kind { line, arc };
  Kind kind = Kind::line;
  Vec2 start = Vec2::Zero();
  double heading = 0.0;    // tangent angle at segment start
  double length = 0.0;     // arc length along the segment
  double curvature = 0.0;  // signed, 1/m; zero for lines
  double tau0 = 0.0;       // cumulative arc length at segment start

  Vec2 end_point() const;
  double end_heading() const { return heading + curvature * length; }
  /// Center of curvature; only meaningful for arcs.
  Vec2 arc_center() const { return start + rot90(heading_vec(heading)) / curvature; }
};

/// Local track frame at arc length tau: point on the center line, unit
/// tangent, left unit normal, and the signed curvature of the owning segment.
struct TrackFrame {
  double tau = 0.0;
  Vec2 point = Vec2::Zero();
  Vec2 tangent = Vec2::UnitX();
  Vec2 normal = Vec2::UnitY();
  double curvature = 0.0;
};

/// Lap counter plus arc-length coordinate; total = laps * L + tau.
struct ProgressState {
  int laps = 0;
  double tau = 0.0;
  double total = 0.0;
};

/// Closed planar race track: an arc-length-parameterized center line made of
/// line/arc segments with C1 junctions, and a constant corridor half-width.
/// Immutable after construction; all queries are const and thread-safe.
class TrackModel {
 public:
  /// Validates closure (1e-9 m / 1e-9 rad), segment chaining, and that every
  /// arc radius exceeds the half-width. Throws TrackError on violation.
  static TrackModel from_segments(std::vector<Segment> segments, double half_width);

  double total_length() const { return total_length_; }
  double half_width() const { return half_width_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Frame at arc length tau (wrapped into [0, L)). Junction tau values
  /// resolve to the downstream segment.
  TrackFrame frame_at(double tau) const;

  /// Wrap an arc-length coordinate into [0, L).
  double wrap_tau(double tau) const;

 private:
  std::vector<Segment> segments_;
  double total_length_ = 0.0;
  double half_width_ = 0.0;
};

/// Closest-point projection of p onto the center line. Without a hint,
/// returns the global minimizer of 0.5*|gamma(s) - p|^2; with a hint, returns
/// the local minimizer whose tau is closest to the hint modulo L (tracking
/// continuity across the medial axis). Throws AmbiguousProjection when p
/// coincides with an arc center that wins the global comparison and no hint
/// was given.
TrackFrame project(const TrackModel& track, const Vec2& p,
                   std::optional<double> hint = std::nullopt);

/// d tau / d p at p: the row vector t^T / (1 - kappa * (p - gamma)^T n).
/// Throws SingularProjection when the denominator magnitude is <= 1e-6.
Eigen::RowVector2d progress_sensitivity(const TrackModel& track, const Vec2& p,
                                        std::optional<double> hint = std::nullopt);

/// |n^T (p - gamma)| - half_width; <= 0 iff p is inside the corridor.
double corridor_excess(const TrackModel& track, const Vec2& p,
                       std::optional<double> hint = std::nullopt);

/// Advance lap accounting given a new position; per-step motion must be less
/// than half a lap.
ProgressState update_progress(const ProgressState& prev, const TrackModel& track,
                              const Vec2& p);

/// Circle track of given radius, counter-clockwise, starting at angle
/// start_angle on the circle (tau = 0 there).
TrackModel make_circle_track(double radius, double half_width,
                             const Vec2& center = Vec2::Zero(), double start_angle = 0.0);

/// Stadium: two straights of the given length joined by half-circle caps,
/// centered on the origin, first straight along +x at y = -cap_radius.
TrackModel make_stadium_track(double straight_length, double cap_radius, double half_width);

/// Rounded rectangle matching the simulation campaign geometry: 9 m and 5 m
/// straights, 3 m corner radius (15 x 11 m center-line bounding box), tau = 0
/// at the center-left of the main straight, which runs along +x at y = 0 and
/// is centered on the world origin.
TrackModel make_paper_track(double half_width = 1.5);

/// Hardware-experiment preset: 2.3 m rounded square, 0.9 m half-width.
TrackModel make_hardware_track();

/// Load a track from the turtle-style JSON file format:
///   {"start": [x, y, heading], "half_width": w,
///    "segments": [{"type": "line", "length": l} |
///                 {"type": "arc", "radius": r, "angle": a}, ...]}
/// Angles in radians, positive = left turn. Throws TrackError with a closure
/// diagnostic (meters and radians) if the chain does not close.
TrackModel load_track(const std::string& path);
TrackModel track_from_json_text(const std::string& text);

}  // namespace drace
