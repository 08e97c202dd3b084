#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

#include "gcil/command.hpp"
#include "gcil/geometry.hpp"

namespace gcil::sim {

/// Approach arms of a four-way crossing, counter-clockwise from the south.
enum class Arm { South = 0, East = 1, North = 2, West = 3 };

inline constexpr std::array<Arm, 4> kAllArms = {Arm::South, Arm::East, Arm::North, Arm::West};

constexpr std::string_view to_string(Arm a) {
  switch (a) {
    case Arm::South: return "south";
    case Arm::East: return "east";
    case Arm::North: return "north";
    case Arm::West: return "west";
  }
  return "south";
}
std::optional<Arm> parse_arm(std::string_view name);

/// A reference path through the crossing plus the arc lengths where it
/// enters and leaves the junction box.
struct LanePath {
  Arm arm = Arm::South;
  Command maneuver = Command::Forward;
  Polyline line;
  double box_entry = 0.0;
  double box_exit = 0.0;
};

/// Crossing of two roads with one inbound and one outbound lane per arm
/// (right-hand traffic). The junction box is the square |x|,|y| <= junction_half
/// around the origin; each arm extends arm_length from the center.
class IntersectionLayout {
 public:
  IntersectionLayout(double lane_width, double arm_length);

  double lane_width() const { return lane_width_; }
  double arm_length() const { return arm_length_; }
  double junction_half() const { return junction_half_; }

  const LanePath& path(Arm arm, Command maneuver) const {
    return paths_[static_cast<std::size_t>(arm)][index_of(maneuver)];
  }

  bool inside_box(Vec2 p, double inflation = 0.0) const;

  /// Minimum distance between two paths' sample points.
  static double path_separation(const LanePath& a, const LanePath& b);

 private:
  double lane_width_;
  double arm_length_;
  double junction_half_;
  std::array<std::array<LanePath, kNumCommands>, 4> paths_;
};

}  // namespace gcil::sim
