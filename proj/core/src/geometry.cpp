#include "gcil/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace gcil {

double normalize_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, kTwoPi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("polyline needs at least two points");
  arc_.reserve(points_.size());
  arc_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double seg = (points_[i] - points_[i - 1]).norm();
    if (!(seg > 0.0)) throw std::invalid_argument("polyline has repeated points");
    arc_.push_back(arc_.back() + seg);
  }
}

std::size_t Polyline::segment_for(double s) const {
  const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  const auto idx = static_cast<std::size_t>(std::distance(arc_.begin(), it));
  return std::clamp<std::size_t>(idx, 1, points_.size() - 1) - 1;
}

Vec2 Polyline::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_for(s);
  const double t = (s - arc_[i]) / (arc_[i + 1] - arc_[i]);
  return points_[i] + (points_[i + 1] - points_[i]) * t;
}

double Polyline::heading_at(double s) const {
  const std::size_t i = segment_for(std::clamp(s, 0.0, length()));
  const Vec2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

Polyline::Projection Polyline::project(Vec2 p) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const double len2 = d.dot(d);
    const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
    const Vec2 q = a + d * t;
    const double dist = (p - q).norm();
    if (dist < best.distance) {
      best.distance = dist;
      best.point = q;
      best.arc = arc_[i] + t * (arc_[i + 1] - arc_[i]);
      best.lateral = d.cross(p - a) >= 0.0 ? dist : -dist;
    }
  }
  return best;
}

}  // namespace gcil
