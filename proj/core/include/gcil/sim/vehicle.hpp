#pragma once

#include <cstdint>

#include "gcil/command.hpp"
#include "gcil/geometry.hpp"

namespace gcil::sim {

/// Kinematic bicycle parameters shared by every vehicle in a world.
struct VehicleParams {
  double wheelbase = 2.5;    // m
  double phi_max_deg = 35.0; // max front-wheel angle
  double a_max = 3.0;        // m/s^2, full throttle
  double b_max = 6.0;        // m/s^2, full brake
  double v_max = 10.0;       // m/s
  double length = 4.0;       // m, default footprint
  double width = 2.0;        // m

  double phi_max() const { return phi_max_deg * std::numbers::pi / 180.0; }
};

enum class Role { Ego, Surrounding };

struct VehicleState {
  int id = 0;
  Vec2 position;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // >= 0
  double length = 4.0;
  double width = 2.0;
  Role role = Role::Surrounding;

  Vec2 velocity() const { return unit_from_heading(heading) * speed; }
  bool operator==(const VehicleState&) const = default;
};

/// Advances one vehicle by dt. The reference point moves along the exact
/// circular arc implied by the current speed and wheel angle; the speed is
/// then updated with the commanded acceleration and clamped to [0, v_max].
/// Throws std::invalid_argument on non-finite input or dt <= 0.
VehicleState step_vehicle(const VehicleState& state, Action action, double dt,
                          const VehicleParams& params);

/// Oriented-rectangle overlap test (separating axis theorem). Touching
/// boundaries count as overlap.
bool detect_collision(const VehicleState& a, const VehicleState& b);

}  // namespace gcil::sim
