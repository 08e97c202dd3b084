#pragma once

#include <optional>

#include "gcil/sim/layout.hpp"
#include "gcil/sim/vehicle.hpp"

namespace gcil::sim {

/// Geometry of one pure-pursuit evaluation.
struct PursuitGeometry {
  Vec2 target;                   // lookahead point on the path
  double lookahead_distance = 0; // |target - position|
  double alpha = 0;              // bearing of target relative to heading
  double curvature = 0;          // 2 sin(alpha) / lookahead_distance
  double wheel_angle = 0;        // atan(wheelbase * curvature), unclamped
  double path_distance = 0;      // distance from the vehicle to the path
  double arc = 0;                // arc length of the vehicle's projection
};

PursuitGeometry pure_pursuit(const VehicleState& vehicle, const Polyline& path, double lookahead,
                             const VehicleParams& params);

/// Steering command for a wheel angle, clamped to [-1, 1].
double steering_command(double wheel_angle, const VehicleParams& params);

/// Proportional speed controller, clamped to [-1, 1].
double throttle_command(double speed, double target_speed, double gain);

struct SurroundingParams {
  double lookahead = 4.0;        // m
  double capture_distance = 3.0; // m, beyond this the agent is off-path
  double speed_gain = 0.5;       // throttle per m/s of speed error
  double following_gap = 12.0;   // m, leader distance that triggers following
  double standstill_gap = 6.0;   // m, center-to-center gap at which to stop
  double headway = 1.0;          // s
};

/// Vehicle directly ahead on the same path.
struct Leader {
  double gap = 0.0;  // arc-length distance, center to center
  double speed = 0.0;
};

struct AgentControl {
  Action action;
  bool off_path = false;
};

/// Path tracking for a surrounding agent: pure-pursuit steering toward a
/// lookahead point, proportional control toward the cruise speed, and a
/// reduced speed target when a same-path leader is within the following gap.
/// An agent farther than capture_distance from its path holds a zero action.
AgentControl surrounding_control(const VehicleState& vehicle, const LanePath& path,
                                 double cruise_speed, std::optional<Leader> leader,
                                 const SurroundingParams& params,
                                 const VehicleParams& vehicle_params);

}  // namespace gcil::sim
