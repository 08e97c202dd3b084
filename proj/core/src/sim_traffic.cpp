#include <algorithm>
#include <cmath>

#include "gcil/sim/traffic.hpp"

namespace gcil::sim {

PursuitGeometry pure_pursuit(const VehicleState& vehicle, const Polyline& path, double lookahead,
                             const VehicleParams& params) {
  PursuitGeometry g;
  const auto proj = path.project(vehicle.position);
  g.arc = proj.arc;
  g.path_distance = proj.distance;

  const double s = proj.arc + lookahead;
  if (s <= path.length()) {
    g.target = path.point_at(s);
  } else {
    // Past the end: continue straight along the final heading.
    g.target = path.point_at(path.length()) +
               unit_from_heading(path.heading_at(path.length())) * (s - path.length());
  }
  const Vec2 d = g.target - vehicle.position;
  g.lookahead_distance = d.norm();
  if (g.lookahead_distance <= 0.0) return g;
  g.alpha = normalize_angle(std::atan2(d.y, d.x) - vehicle.heading);
  g.curvature = 2.0 * std::sin(g.alpha) / g.lookahead_distance;
  g.wheel_angle = std::atan(params.wheelbase * g.curvature);
  return g;
}

double steering_command(double wheel_angle, const VehicleParams& params) {
  return std::clamp(wheel_angle / params.phi_max(), -1.0, 1.0);
}

double throttle_command(double speed, double target_speed, double gain) {
  return std::clamp(gain * (target_speed - speed), -1.0, 1.0);
}

AgentControl surrounding_control(const VehicleState& vehicle, const LanePath& path,
                                 double cruise_speed, std::optional<Leader> leader,
                                 const SurroundingParams& params,
                                 const VehicleParams& vehicle_params) {
  const PursuitGeometry g = pure_pursuit(vehicle, path.line, params.lookahead, vehicle_params);
  if (g.path_distance > params.capture_distance) return {{0.0, 0.0}, true};

  double target = cruise_speed;
  if (leader && leader->gap < params.following_gap) {
    const double gap_speed = std::max(0.0, (leader->gap - params.standstill_gap) / params.headway);
    target = std::min(target, gap_speed);
  }
  // The path ends at the far edge of the map: stop there.
  if (g.arc >= path.line.length() - 0.5) target = 0.0;

  Action a{steering_command(g.wheel_angle, vehicle_params),
           throttle_command(vehicle.speed, target, params.speed_gain)};
  return {a, false};
}

}  // namespace gcil::sim
