#include <algorithm>
#include <cmath>

#include "gcil/expert/expert.hpp"

namespace gcil::expert {

double time_to_collision(Vec2 rel_pos, Vec2 rel_vel, double radius) {
  const double c = rel_pos.dot(rel_pos) - radius * radius;
  if (c <= 0.0) return 0.0;
  const double a = rel_vel.dot(rel_vel);
  const double b = 2.0 * rel_pos.dot(rel_vel);
  if (a <= 0.0 || b >= 0.0) return kNever;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kNever;
  // Smaller root, written to avoid cancellation (b < 0 here).
  return (2.0 * c) / (-b + std::sqrt(disc));
}

std::optional<ZoneWindow> zone_crossing(Vec2 position, Vec2 velocity, double half) {
  double enter = 0.0;
  double exit = kNever;
  const double p[2] = {position.x, position.y};
  const double v[2] = {velocity.x, velocity.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (v[axis] == 0.0) {
      if (std::abs(p[axis]) > half) return std::nullopt;
      continue;
    }
    double t0 = (-half - p[axis]) / v[axis];
    double t1 = (half - p[axis]) / v[axis];
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    exit = std::min(exit, t1);
  }
  if (enter > exit || exit < 0.0) return std::nullopt;
  return ZoneWindow{enter, exit};
}

namespace {

// Time to cover `distance` starting at speed v, accelerating at `accel`
// until v_cap.
double travel_time(double distance, double v, double v_cap, double accel) {
  if (distance <= 0.0) return 0.0;
  v = std::min(v, v_cap);
  const double t_cap = (v_cap - v) / accel;
  const double d_cap = v * t_cap + 0.5 * accel * t_cap * t_cap;
  if (distance <= d_cap) return (-v + std::sqrt(v * v + 2.0 * accel * distance)) / accel;
  return t_cap + (distance - d_cap) / v_cap;
}

}  // namespace

ExpertDecision expert_control(const sim::WorldState& world, const sim::LanePath& path,
                              const ExpertParams& params) {
  ExpertDecision d;
  const auto& ego = world.ego;
  const auto proj = path.line.project(ego.position);
  if (proj.distance > params.capture_distance) {
    d.off_path = true;
    return d;
  }

  const double half_len = 0.5 * ego.length;
  const double front = proj.arc + half_len;
  const double stop_line = path.box_entry - params.yield_zone;
  d.committed = front > path.box_entry;
  double target = params.v_pref;

  // Leader on the ego's own path.
  for (const auto& other : world.surrounding) {
    const auto op = path.line.project(other.position);
    if (op.distance > 0.5 * world.layout->lane_width() + 0.5) continue;
    const double misalign =
        std::abs(normalize_angle(other.heading - path.line.heading_at(op.arc)));
    if (misalign > std::numbers::pi / 4) continue;
    const double gap = op.arc - proj.arc;
    if (gap <= 0.0 || gap > 25.0) continue;
    target = std::min(target, std::max(0.0, (gap - params.follow_distance) / params.follow_headway));
  }

  if (!d.committed) {
    const double zone_half = world.layout->junction_half() + params.yield_zone;
    const double to_zone = stop_line - front;
    const double through = path.box_exit + params.yield_zone + half_len - (proj.arc - half_len);
    const double v_go = std::max(ego.speed, params.creep_speed);
    const double t_in = travel_time(to_zone, v_go, params.v_pref, params.nominal_accel);
    const double t_out = travel_time(through, v_go, params.v_pref, params.nominal_accel);

    for (const auto& other : world.surrounding) {
      // Agents are treated as points on a box inflated by their half length.
      const auto w = zone_crossing(other.position, other.velocity(), zone_half + 0.5 * other.length);
      if (!w) continue;
      if (w->enter < t_out + params.ttc_threshold && w->exit > t_in - 0.5) {
        d.yielding = true;
        break;
      }
    }
    if (d.yielding) {
      const double approach =
          to_zone > 0.0 ? std::sqrt(2.0 * params.comfort_brake * to_zone) : 0.0;
      const double floor = to_zone > 1.0 ? params.creep_speed : 0.0;
      target = std::min(target, std::max(std::min(approach, params.creep_speed * 2.0), floor));
      if (to_zone <= 0.5) target = 0.0;
    }
  }

  d.target_speed = target;
  const auto pp = sim::pure_pursuit(ego, path.line, params.lookahead, world.vehicle);
  d.action.delta = sim::steering_command(pp.wheel_angle, world.vehicle);
  d.action.tau = sim::throttle_command(ego.speed, target, params.speed_gain);
  return d;
}

}  // namespace gcil::expert
