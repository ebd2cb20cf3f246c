#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace drace {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Rotate a vector by +90 degrees (counter-clockwise).
inline Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline Vec2 heading_vec(double theta) { return Vec2(std::cos(theta), std::sin(theta)); }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

/// Wrap a periodic coordinate difference into (-period/2, period/2].
inline double wrap_diff(double d, double period) {
  d = std::fmod(d, period);
  if (d > 0.5 * period) d -= period;
  if (d <= -0.5 * period) d += period;
  return d;
}

inline Mat2 rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// Skew-symmetric matrix of a 3-vector, [w]x v = w x v.
inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

}  // namespace drace
