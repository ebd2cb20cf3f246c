#include "drace/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace drace {

namespace {

constexpr double kClosureTolPos = 1e-9;
constexpr double kClosureTolAng = 1e-9;
constexpr double kAmbiguousRadius = 1e-9;
constexpr double kSingularDenom = 1e-6;

// One constrained minimizer of the squared distance restricted to a segment.
struct Candidate {
  double tau = 0.0;
  double dist2 = std::numeric_limits<double>::infinity();
  bool stationary = false;  // derivative of the distance vanishes (local min of the closed curve)
  bool ambiguous = false;   // p at arc center: every point of the arc is equidistant
  int segment = -1;
};

Candidate line_candidate(const Segment& seg, const Vec2& p) {
  const Vec2 t = heading_vec(seg.heading);
  const double s_raw = (p - seg.start).dot(t);
  const double s = std::clamp(s_raw, 0.0, seg.length);
  const Vec2 q = seg.start + s * t;
  Candidate c;
  c.tau = seg.tau0 + s;
  c.dist2 = (p - q).squaredNorm();
  c.stationary = std::abs(s_raw - s) <= 1e-9;
  return c;
}

Candidate arc_candidate(const Segment& seg, const Vec2& p, std::optional<double> hint,
                        double track_length) {
  const Vec2 c = seg.arc_center();
  const Vec2 r = p - c;
  const double radius = 1.0 / std::abs(seg.curvature);
  Candidate cand;
  if (r.norm() <= kAmbiguousRadius) {
    // Equidistant from the whole arc. With a hint, take the arc point nearest
    // the hint in tau; otherwise flag the tie for the caller.
    double s = 0.5 * seg.length;
    if (hint) {
      const double local = wrap_diff(*hint - seg.tau0, track_length);
      s = std::clamp(local, 0.0, seg.length);
    } else {
      cand.ambiguous = true;
    }
    cand.tau = seg.tau0 + s;
    cand.dist2 = radius * radius;
    cand.stationary = true;
    return cand;
  }
  // Angle of p about the center, measured as arc length from the segment
  // start in the direction of travel.
  const double psi0 = std::atan2(seg.start.y() - c.y(), seg.start.x() - c.x());
  const double psi_p = std::atan2(r.y(), r.x());
  double delta = (psi_p - psi0) * (seg.curvature > 0 ? 1.0 : -1.0);
  delta = std::fmod(delta, 2.0 * M_PI);
  if (delta < 0) delta += 2.0 * M_PI;
  const double s_near = delta * radius;  // in [0, 2*pi*R)
  double s = 0.0;
  bool stationary = false;
  if (s_near <= seg.length) {
    s = s_near;
    stationary = true;
  } else {
    // Nearest point lies off the arc span: the constrained minimum is at an
    // end point; pick the closer one.
    const Vec2 q0 = seg.start;
    const Vec2 q1 = seg.end_point();
    s = ((p - q0).squaredNorm() <= (p - q1).squaredNorm()) ? 0.0 : seg.length;
  }
  const double psi = psi0 + s * seg.curvature;
  const Vec2 q = c + radius * Vec2(std::cos(psi), std::sin(psi));
  cand.tau = seg.tau0 + s;
  cand.dist2 = (p - q).squaredNorm();
  cand.stationary = stationary;
  return cand;
}

}  // namespace

Vec2 Segment::end_point() const {
  if (kind == Kind::line || curvature == 0.0) return start + length * heading_vec(heading);
  const Vec2 c = arc_center();
  const double radius = 1.0 / std::abs(curvature);
  const double psi0 = std::atan2(start.y() - c.y(), start.x() - c.x());
  const double psi = psi0 + length * curvature;
  return c + radius * Vec2(std::cos(psi), std::sin(psi));
}

TrackModel TrackModel::from_segments(std::vector<Segment> segments, double half_width) {
  if (segments.empty()) throw TrackError("track needs at least one segment");
  if (!(half_width > 0)) throw TrackError("half_width must be positive");
  double tau = 0.0;
  for (size_t i = 0; i < segments.size(); ++i) {
    Segment& s = segments[i];
    if (!(s.length > 0)) throw TrackError("segment length must be positive");
    if (s.kind == Segment::Kind::arc) {
      if (s.curvature == 0.0) throw TrackError("arc segment with zero curvature");
      const double radius = 1.0 / std::abs(s.curvature);
      if (radius <= half_width) {
        std::ostringstream os;
        os << "arc radius " << radius << " m does not exceed half_width " << half_width
           << " m; corridor self-intersects";
        throw TrackError(os.str());
      }
    } else {
      s.curvature = 0.0;
    }
    s.tau0 = tau;
    tau += s.length;
  }
  // Chain continuity, then closure back to the first segment.
  for (size_t i = 0; i < segments.size(); ++i) {
    const Segment& a = segments[i];
    const Segment& b = segments[(i + 1) % segments.size()];
    const double pos_err = (a.end_point() - b.start).norm();
    const double ang_err = std::abs(wrap_angle(a.end_heading() - b.heading));
    if (pos_err > kClosureTolPos || ang_err > kClosureTolAng) {
      std::ostringstream os;
      os << "track not closed at junction " << i << ": position error " << pos_err
         << " m, heading error " << ang_err << " rad";
      throw TrackError(os.str());
    }
  }
  TrackModel m;
  m.segments_ = std::move(segments);
  m.total_length_ = tau;
  m.half_width_ = half_width;
  return m;
}

double TrackModel::wrap_tau(double tau) const {
  tau = std::fmod(tau, total_length_);
  if (tau < 0) tau += total_length_;
  // fmod can return total_length_ - eps rounding to L exactly
  if (tau >= total_length_) tau = 0.0;
  return tau;
}

TrackFrame TrackModel::frame_at(double tau) const {
  const double t = wrap_tau(tau);
  // Owning segment: half-open intervals [tau0, tau0 + length), so junction
  // values belong to the downstream segment.
  size_t lo = 0, hi = segments_.size();
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (segments_[mid].tau0 <= t)
      lo = mid;
    else
      hi = mid;
  }
  const Segment& seg = segments_[lo];
  const double s = t - seg.tau0;
  TrackFrame f;
  f.tau = t;
  f.curvature = seg.curvature;
  if (seg.kind == Segment::Kind::line) {
    f.tangent = heading_vec(seg.heading);
    f.normal = rot90(f.tangent);
    f.point = seg.start + s * f.tangent;
  } else {
    const Vec2 c = seg.arc_center();
    const double radius = 1.0 / std::abs(seg.curvature);
    const double psi0 = std::atan2(seg.start.y() - c.y(), seg.start.x() - c.x());
    const double psi = psi0 + s * seg.curvature;
    const Vec2 e(std::cos(psi), std::sin(psi));
    const double sgn = seg.curvature > 0 ? 1.0 : -1.0;
    f.point = c + radius * e;
    f.tangent = sgn * rot90(e);
    f.normal = rot90(f.tangent);
  }
  return f;
}

TrackFrame project(const TrackModel& track, const Vec2& p, std::optional<double> hint) {
  if (!p.allFinite()) throw TrackError("projection of non-finite point");
  const double L = track.total_length();
  Candidate best;
  if (!hint) {
    for (size_t i = 0; i < track.segments().size(); ++i) {
      const Segment& seg = track.segments()[i];
      Candidate c = seg.kind == Segment::Kind::line ? line_candidate(seg, p)
                                                    : arc_candidate(seg, p, hint, L);
      c.segment = static_cast<int>(i);
      if (c.dist2 < best.dist2) best = c;
    }
    if (best.ambiguous)
      throw AmbiguousProjection("point coincides with an arc center; projection not unique");
  } else {
    // Track the branch: among local minimizers of the closed-curve distance,
    // take the one nearest the hint in wrapped arc length.
    const double h = track.wrap_tau(*hint);
    double best_gap = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < track.segments().size(); ++i) {
      const Segment& seg = track.segments()[i];
      Candidate c = seg.kind == Segment::Kind::line ? line_candidate(seg, p)
                                                    : arc_candidate(seg, p, hint, L);
      c.segment = static_cast<int>(i);
      if (!c.stationary) continue;
      const double gap = std::abs(wrap_diff(c.tau - h, L));
      if (gap < best_gap - 1e-12 || (gap < best_gap + 1e-12 && c.dist2 < best.dist2)) {
        best_gap = gap;
        best = c;
      }
    }
  }
  return track.frame_at(best.tau);
}

Eigen::RowVector2d progress_sensitivity(const TrackModel& track, const Vec2& p,
                                        std::optional<double> hint) {
  const TrackFrame f = project(track, p, hint);
  const double denom = 1.0 - f.curvature * (p - f.point).dot(f.normal);
  if (std::abs(denom) <= kSingularDenom)
    throw SingularProjection("progress sensitivity singular: point at center of curvature");
  return f.tangent.transpose() / denom;
}

double corridor_excess(const TrackModel& track, const Vec2& p, std::optional<double> hint) {
  const TrackFrame f = project(track, p, hint);
  return std::abs(f.normal.dot(p - f.point)) - track.half_width();
}

ProgressState update_progress(const ProgressState& prev, const TrackModel& track,
                              const Vec2& p) {
  const double L = track.total_length();
  const double tau_new = project(track, p, prev.tau).tau;
  const double step = wrap_diff(tau_new - prev.tau, L);
  const double cont = prev.tau + step;
  ProgressState next;
  next.laps = prev.laps + (cont >= L ? 1 : (cont < 0 ? -1 : 0));
  next.tau = tau_new;
  next.total = next.laps * L + tau_new;
  return next;
}

TrackModel make_circle_track(double radius, double half_width, const Vec2& center,
                             double start_angle) {
  Segment arc;
  arc.kind = Segment::Kind::arc;
  arc.start = center + radius * Vec2(std::cos(start_angle), std::sin(start_angle));
  arc.heading = start_angle + M_PI / 2.0;
  arc.curvature = 1.0 / radius;
  arc.length = 2.0 * M_PI * radius;
  return TrackModel::from_segments({arc}, half_width);
}

namespace {

// Walk a turtle command list into a validated segment chain.
struct TurtleBuilder {
  Vec2 pos;
  double heading;
  std::vector<Segment> segments;

  void line(double length) {
    Segment s;
    s.kind = Segment::Kind::line;
    s.start = pos;
    s.heading = heading;
    s.length = length;
    segments.push_back(s);
    pos += length * heading_vec(heading);
  }
  void arc(double radius, double angle) {
    Segment s;
    s.kind = Segment::Kind::arc;
    s.start = pos;
    s.heading = heading;
    s.curvature = (angle >= 0 ? 1.0 : -1.0) / radius;
    s.length = std::abs(angle) * radius;
    segments.push_back(s);
    pos = s.end_point();
    heading += angle;
  }
};

}  // namespace

TrackModel make_stadium_track(double straight_length, double cap_radius, double half_width) {
  TurtleBuilder t{Vec2(-0.5 * straight_length, -cap_radius), 0.0, {}};
  t.line(straight_length);
  t.arc(cap_radius, M_PI);
  t.line(straight_length);
  t.arc(cap_radius, M_PI);
  return TrackModel::from_segments(std::move(t.segments), half_width);
}

TrackModel make_paper_track(double half_width) {
  const double long_straight = 9.0;
  const double short_straight = 5.0;
  const double corner = 3.0;
  TurtleBuilder t{Vec2(-0.5 * long_straight, 0.0), 0.0, {}};
  t.line(long_straight);
  t.arc(corner, M_PI / 2.0);
  t.line(short_straight);
  t.arc(corner, M_PI / 2.0);
  t.line(long_straight);
  t.arc(corner, M_PI / 2.0);
  t.line(short_straight);
  t.arc(corner, M_PI / 2.0);
  return TrackModel::from_segments(std::move(t.segments), half_width);
}

TrackModel make_hardware_track() {
  const double side = 2.3;
  const double corner = 0.95;
  const double straight = side - 2.0 * corner;
  TurtleBuilder t{Vec2(-0.5 * straight, 0.0), 0.0, {}};
  for (int i = 0; i < 4; ++i) {
    t.line(straight);
    t.arc(corner, M_PI / 2.0);
  }
  return TrackModel::from_segments(std::move(t.segments), 0.9);
}

TrackModel track_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw TrackError(std::string("track file parse error: ") + e.what());
  }
  try {
    const auto start = j.at("start");
    TurtleBuilder t{Vec2(start.at(0).get<double>(), start.at(1).get<double>()),
                    start.at(2).get<double>(),
                    {}};
    for (const auto& seg : j.at("segments")) {
      const std::string type = seg.at("type").get<std::string>();
      if (type == "line") {
        t.line(seg.at("length").get<double>());
      } else if (type == "arc") {
        t.arc(seg.at("radius").get<double>(), seg.at("angle").get<double>());
      } else {
        throw TrackError("unknown segment type: " + type);
      }
    }
    return TrackModel::from_segments(std::move(t.segments), j.at("half_width").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw TrackError(std::string("track file field error: ") + e.what());
  }
}

TrackModel load_track(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TrackError("cannot open track file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return track_from_json_text(ss.str());
}

}  // namespace drace
