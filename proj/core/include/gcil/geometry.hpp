#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace gcil {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Counter-clockwise quarter turn, exact in floating point.
constexpr Vec2 rotate_quarter(Vec2 v) { return {-v.y, v.x}; }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// Piecewise-linear path parameterized by arc length.
class Polyline {
 public:
  struct Projection {
    double arc = 0.0;      // arc length of the closest point
    double lateral = 0.0;  // signed offset, positive to the left of travel
    Vec2 point;
    double distance = 0.0;
  };

  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }
  std::span<const Vec2> points() const { return points_; }
  std::span<const double> arcs() const { return arc_; }

  /// Point at arc length s, clamped to the path ends.
  Vec2 point_at(double s) const;
  /// Direction of travel at arc length s.
  double heading_at(double s) const;
  Projection project(Vec2 p) const;

 private:
  std::size_t segment_for(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> arc_;
};

}  // namespace gcil
