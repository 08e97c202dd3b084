#include <cmath>
#include <limits>
#include <stdexcept>

#include "gcil/sim/layout.hpp"

namespace gcil::sim {

namespace {

constexpr double kStraightSpacing = 0.5;
constexpr double kArcSpacing = 0.25;

void append_line(std::vector<Vec2>& pts, Vec2 from, Vec2 to) {
  const double len = (to - from).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / kStraightSpacing)));
  for (int i = pts.empty() ? 0 : 1; i <= n; ++i) pts.push_back(from + (to - from) * (double(i) / n));
}

// Arc around `center` from angle a0 to a1 (radians, either direction).
void append_arc(std::vector<Vec2>& pts, Vec2 center, double radius, double a0, double a1) {
  const double len = std::abs(a1 - a0) * radius;
  const int n = std::max(2, static_cast<int>(std::ceil(len / kArcSpacing)));
  for (int i = 1; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * (double(i) / n);
    pts.push_back(center + Vec2{std::cos(a), std::sin(a)} * radius);
  }
}

Vec2 rotate_arm(Vec2 v, int quarter_turns) {
  for (int i = 0; i < quarter_turns; ++i) v = rotate_quarter(v);
  return v;
}

// Paths for the south arm (travelling north); other arms are exact quarter
// rotations of these.
std::vector<Vec2> south_path(Command maneuver, double half_lane, double box, double arm) {
  std::vector<Vec2> pts;
  append_line(pts, {half_lane, -arm}, {half_lane, -box});
  constexpr double kPi = std::numbers::pi;
  switch (maneuver) {
    case Command::Forward:
      append_line(pts, {half_lane, -box}, {half_lane, arm});
      break;
    case Command::TurnRight:
      append_arc(pts, {box, -box}, box - half_lane, kPi, kPi / 2);
      append_line(pts, {box, -half_lane}, {arm, -half_lane});
      break;
    case Command::TurnLeft:
      append_arc(pts, {-box, -box}, box + half_lane, 0.0, kPi / 2);
      append_line(pts, {-box, half_lane}, {-arm, half_lane});
      break;
  }
  return pts;
}

}  // namespace

std::optional<Arm> parse_arm(std::string_view name) {
  for (Arm a : kAllArms)
    if (to_string(a) == name) return a;
  return std::nullopt;
}

IntersectionLayout::IntersectionLayout(double lane_width, double arm_length)
    : lane_width_(lane_width), arm_length_(arm_length), junction_half_(2.0 * lane_width) {
  if (!(lane_width > 0.0) || !(arm_length > junction_half_ + 1.0))
    throw std::invalid_argument("layout needs lane_width > 0 and arm_length > 2*lane_width + 1");
  for (Arm arm : kAllArms) {
    for (Command c : kAllCommands) {
      auto pts = south_path(c, 0.5 * lane_width_, junction_half_, arm_length_);
      for (Vec2& p : pts) p = rotate_arm(p, static_cast<int>(arm));
      LanePath lp;
      lp.arm = arm;
      lp.maneuver = c;
      lp.line = Polyline(std::move(pts));
      lp.box_entry = arm_length_ - junction_half_;
      Vec2 exit_point = c == Command::Forward   ? Vec2{0.5 * lane_width_, junction_half_}
                        : c == Command::TurnRight ? Vec2{junction_half_, -0.5 * lane_width_}
                                                  : Vec2{-junction_half_, 0.5 * lane_width_};
      lp.box_exit = lp.line.project(rotate_arm(exit_point, static_cast<int>(arm))).arc;
      paths_[static_cast<std::size_t>(arm)][index_of(c)] = std::move(lp);
    }
  }
}

bool IntersectionLayout::inside_box(Vec2 p, double inflation) const {
  const double h = junction_half_ + inflation;
  return std::abs(p.x) <= h && std::abs(p.y) <= h;
}

double IntersectionLayout::path_separation(const LanePath& a, const LanePath& b) {
  double best = std::numeric_limits<double>::infinity();
  for (Vec2 p : a.line.points()) best = std::min(best, b.line.project(p).distance);
  return best;
}

}  // namespace gcil::sim
