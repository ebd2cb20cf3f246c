#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "drace/track.hpp"
#include "drace/verify.hpp"

using namespace drace;

namespace {

Vec2 corridor_point(const TrackModel& track, double tau, double lateral) {
  const TrackFrame f = track.frame_at(tau);
  return f.point + lateral * f.normal;
}

}  // namespace

TEST_CASE("projection on a circle track") {
  const TrackModel track = make_circle_track(5.0, 1.5);
  CHECK(track.total_length() == doctest::Approx(2 * M_PI * 5.0));

  const TrackFrame f = project(track, Vec2(5.2, 0.0));
  CHECK(f.tau == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.tangent.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.tangent.y() == doctest::Approx(1.0));
  CHECK(f.normal.x() == doctest::Approx(-1.0));
  CHECK(f.normal.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.curvature == doctest::Approx(0.2));
}

TEST_CASE("projection onto a straight segment") {
  // Stadium whose first segment runs along +x.
  const TrackModel track = make_stadium_track(2.0, 2.0, 1.0);
  const Segment& first = track.segments()[0];
  REQUIRE(first.kind == Segment::Kind::line);
  const Vec2 p = first.start + Vec2(1.0, 0.3);
  const TrackFrame f = project(track, p);
  CHECK(f.tau == doctest::Approx(1.0));
  CHECK((f.point - (first.start + Vec2(1.0, 0.0))).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.tangent.x() == doctest::Approx(1.0));
  CHECK(f.tangent.y() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("projection against a dense polyline search") {
  const TrackModel track = make_paper_track();
  const verify::PolylineOracle oracle(track, 1000000);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> utau(0.0, track.total_length());
  std::uniform_real_distribution<double> ulat(-1.4, 1.4);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p = corridor_point(track, utau(rng), ulat(rng));
    const double tau = project(track, p).tau;
    const double tau_oracle = oracle.tau(p);
    CHECK(std::abs(wrap_diff(tau - tau_oracle, track.total_length())) < 1e-4);
  }
}

TEST_CASE("projection is idempotent on center-line points") {
  const TrackModel track = make_paper_track();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> utau(0.0, track.total_length());
  std::uniform_real_distribution<double> ulat(-1.2, 1.2);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p = corridor_point(track, utau(rng), ulat(rng));
    const TrackFrame f = project(track, p);
    const TrackFrame f2 = project(track, f.point);
    CHECK(std::abs(wrap_diff(f2.tau - f.tau, track.total_length())) < 1e-9);
  }
}

TEST_CASE("projection hint selects the tracked branch") {
  // Points near the middle of the stadium are nearly equidistant from the two
  // straights; the hint must keep the projection on its own side.
  const TrackModel track = make_stadium_track(6.0, 2.0, 1.0);
  const Segment& first = track.segments()[0];
  const Vec2 mid = first.start + Vec2(3.0, 1.9);  // just below the medial axis
  const double tau_bottom = project(track, mid, first.tau0 + 3.0).tau;
  CHECK(tau_bottom == doctest::Approx(3.0));
  // With a hint on the opposite straight, the local minimizer there wins.
  const double tau_top = project(track, mid, 0.5 * track.total_length() + 3.0).tau;
  CHECK(tau_top > track.total_length() * 0.25);
}

TEST_CASE("ambiguous projection at an arc center") {
  const TrackModel track = make_circle_track(5.0, 1.5);
  CHECK_THROWS_AS(project(track, Vec2(0.0, 0.0)), AmbiguousProjection);
  // A hint resolves the tie.
  CHECK_NOTHROW(project(track, Vec2(0.0, 0.0), 1.0));
}

TEST_CASE("progress sensitivity on a straight is the tangent") {
  const TrackModel track = make_stadium_track(4.0, 2.0, 1.0);
  const Segment& first = track.segments()[0];
  const Vec2 p = first.start + Vec2(2.0, 0.7);
  const Eigen::RowVector2d s = progress_sensitivity(track, p);
  CHECK(s(0) == doctest::Approx(1.0));
  CHECK(s(1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("progress sensitivity on the circle") {
  const TrackModel track = make_circle_track(5.0, 1.5);
  const Eigen::RowVector2d s = progress_sensitivity(track, Vec2(5.2, 0.0));
  CHECK(s(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s(1) == doctest::Approx(1.0 / 1.04));

  // Closed form at 50 offsets: sigma = t^T / (1 + h/R), h the outward offset.
  for (int i = 0; i < 50; ++i) {
    const double h = -1.4 + 2.8 * i / 49.0;
    const double ang = 0.13 * i;
    const Vec2 p = (5.0 + h) * Vec2(std::cos(ang), std::sin(ang));
    const Eigen::RowVector2d si = progress_sensitivity(track, p);
    const Vec2 t(-std::sin(ang), std::cos(ang));
    const double scale = 1.0 / (1.0 + h / 5.0);
    CHECK(si(0) == doctest::Approx(scale * t.x()).epsilon(1e-9));
    CHECK(si(1) == doctest::Approx(scale * t.y()).epsilon(1e-9));
  }
}

TEST_CASE("progress sensitivity matches finite differences") {
  const std::vector<TrackModel> tracks = {make_paper_track(), make_circle_track(5.0, 1.5),
                                          make_hardware_track()};
  std::mt19937_64 rng(3);
  const double eps = 1e-6;
  for (const TrackModel& track : tracks) {
    const double L = track.total_length();
    std::uniform_real_distribution<double> utau(1e-3, L - 1e-3);
    std::uniform_real_distribution<double> ulat(-0.9, 0.9);
    for (int i = 0; i < 100; ++i) {
      const double tau = utau(rng);
      const Vec2 p = corridor_point(track, tau, ulat(rng) * track.half_width());
      const Eigen::RowVector2d s = progress_sensitivity(track, p, tau);
      for (int axis = 0; axis < 2; ++axis) {
        Vec2 d = Vec2::Zero();
        d[axis] = eps;
        const double tp = project(track, p + d, tau).tau;
        const double tm = project(track, p - d, tau).tau;
        const double fd = wrap_diff(tp - tm, L) / (2 * eps);
        CHECK(std::abs(s(axis) - fd) <= 1e-5 * std::max(1.0, std::abs(s(axis))));
      }
    }
  }
}

TEST_CASE("progress sensitivity is singular at the arc center") {
  const TrackModel track = make_circle_track(5.0, 1.5);
  CHECK_THROWS_AS(progress_sensitivity(track, Vec2(1e-10, 0.0), 0.0), SingularProjection);
}

TEST_CASE("corridor excess") {
  const TrackModel track = make_stadium_track(4.0, 2.0, 1.5);
  const Segment& first = track.segments()[0];
  SUBCASE("center line gives minus half width") {
    CHECK(corridor_excess(track, first.start + Vec2(2.0, 0.0)) == doctest::Approx(-1.5));
  }
  SUBCASE("lateral offset 1.7 with half width 1.5 gives +0.2") {
    CHECK(corridor_excess(track, first.start + Vec2(2.0, 1.7)) == doctest::Approx(0.2));
  }
  SUBCASE("sign agrees with the polyline oracle distance") {
    const verify::PolylineOracle oracle(track, 200000);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> utau(0.0, track.total_length());
    std::uniform_real_distribution<double> ulat(-2.5, 2.5);
    for (int i = 0; i < 100; ++i) {
      const Vec2 p = corridor_point(track, utau(rng), ulat(rng));
      const double excess = corridor_excess(track, p);
      const double oracle_excess = oracle.distance(p) - track.half_width();
      CHECK(excess == doctest::Approx(oracle_excess).epsilon(1e-3));
    }
  }
  SUBCASE("1-Lipschitz in the query point") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> utau(0.0, track.total_length());
    std::uniform_real_distribution<double> ulat(-1.4, 1.4);
    for (int i = 0; i < 200; ++i) {
      const Vec2 a = corridor_point(track, utau(rng), ulat(rng));
      const Vec2 b = corridor_point(track, utau(rng), ulat(rng));
      CHECK(std::abs(corridor_excess(track, a) - corridor_excess(track, b)) <=
            (a - b).norm() + 1e-9);
    }
  }
}

TEST_CASE("lap accounting wraps both ways") {
  const TrackModel track = make_circle_track(5.0, 1.5);
  const double L = track.total_length();

  SUBCASE("forward wrap increments the lap") {
    ProgressState prev{0, L - 0.1, L - 0.1};
    const ProgressState next = update_progress(prev, track, track.frame_at(0.05).point);
    CHECK(next.laps == 1);
    CHECK(next.total == doctest::Approx(L + 0.05));
  }
  SUBCASE("backward wrap decrements the lap") {
    ProgressState prev{1, 0.05, L + 0.05};
    const ProgressState next = update_progress(prev, track, track.frame_at(L - 0.1).point);
    CHECK(next.laps == 0);
    CHECK(next.total == doctest::Approx(L - 0.1));
  }
  SUBCASE("a monotone forward lap is strictly increasing") {
    ProgressState s{0, 0.0, 0.0};
    double prev_total = 0.0;
    const int steps = 500;
    for (int i = 1; i <= steps; ++i) {
      s = update_progress(s, track, track.frame_at(L * i / steps).point);
      CHECK(s.total > prev_total);
      prev_total = s.total;
    }
    CHECK(s.total == doctest::Approx(L).epsilon(1e-9));
  }
}

TEST_CASE("track validation") {
  SUBCASE("non-closed loop is rejected with a diagnostic") {
    const std::string text = R"({
      "start": [0, 0, 0], "half_width": 1.0,
      "segments": [{"type": "line", "length": 5.0},
                   {"type": "arc", "radius": 2.0, "angle": 3.141592653589793}]
    })";
    CHECK_THROWS_WITH_AS(track_from_json_text(text), doctest::Contains("not closed"),
                         TrackError);
  }
  SUBCASE("arc radius must exceed the half width") {
    const std::string text = R"({
      "start": [0, 0, 0], "half_width": 1.0,
      "segments": [{"type": "arc", "radius": 0.8, "angle": 6.283185307179586}]
    })";
    CHECK_THROWS_AS(track_from_json_text(text), TrackError);
  }
  SUBCASE("half width must be positive") {
    CHECK_THROWS_AS(make_circle_track(5.0, 0.0), TrackError);
  }
}

TEST_CASE("shipped track files load and close") {
  const TrackModel paper = load_track(std::string(TEST_DATA_DIR) + "/tracks/paper_like.json");
  CHECK(paper.total_length() == doctest::Approx(2 * 9.0 + 2 * 5.0 + 2 * M_PI * 3.0));
  CHECK(paper.half_width() == doctest::Approx(1.5));

  const TrackModel square =
      load_track(std::string(TEST_DATA_DIR) + "/tracks/hardware_square.json");
  CHECK(square.half_width() == doctest::Approx(0.9));
  double x_min = 1e9, x_max = -1e9;
  for (double tau = 0; tau < square.total_length(); tau += 0.01) {
    const Vec2 p = square.frame_at(tau).point;
    x_min = std::min(x_min, p.x());
    x_max = std::max(x_max, p.x());
  }
  CHECK(x_max - x_min == doctest::Approx(2.3).epsilon(1e-6));
}

TEST_CASE("campaign track frame matches the sampling geometry") {
  const TrackModel track = make_paper_track();
  // Main straight centered on the origin along +x.
  const TrackFrame f = project(track, Vec2(0.0, 0.0));
  CHECK(f.point.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.tangent.x() == doctest::Approx(1.0));
  // Center-line bounding box is 15 x 11 m.
  double x_min = 1e9, x_max = -1e9, y_min = 1e9, y_max = -1e9;
  for (double tau = 0; tau < track.total_length(); tau += 0.01) {
    const Vec2 p = track.frame_at(tau).point;
    x_min = std::min(x_min, p.x());
    x_max = std::max(x_max, p.x());
    y_min = std::min(y_min, p.y());
    y_max = std::max(y_max, p.y());
  }
  CHECK(x_max - x_min == doctest::Approx(15.0).epsilon(1e-6));
  CHECK(y_max - y_min == doctest::Approx(11.0).epsilon(1e-6));
}
