#pragma once

#include <limits>
#include <optional>

#include "gcil/sim/scenario.hpp"

namespace gcil::expert {

struct ExpertParams {
  double lookahead = 4.0;      // m, pure-pursuit lookahead
  double ttc_threshold = 2.5;  // s, minimum accepted gap behind/ahead of a crossing agent
  double creep_speed = 1.5;    // m/s, approach speed while a conflict is pending
  double v_pref = 6.0;         // m/s
  double yield_zone = 1.0;     // m, inflation of the junction box
  double speed_gain = 0.5;     // throttle per m/s of speed error
  double capture_distance = 3.0;
  double nominal_accel = 2.0;  // m/s^2, used to predict the ego's own crossing time
  double comfort_brake = 2.5;  // m/s^2, approach profile toward the stop line
  double follow_distance = 7.0;  // m, center-to-center standstill gap to a leader
  double follow_headway = 1.0;   // s
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// Earliest t >= 0 at which |rel_pos + rel_vel t| <= radius under constant
/// relative velocity; kNever if the distance never drops that low.
double time_to_collision(Vec2 rel_pos, Vec2 rel_vel, double radius);

/// Interval of time during which a point moving with constant velocity is
/// inside the axis-aligned square |x|,|y| <= half. nullopt if it never is
/// in the future.
struct ZoneWindow {
  double enter = 0.0;
  double exit = 0.0;
};
std::optional<ZoneWindow> zone_crossing(Vec2 position, Vec2 velocity, double half);

struct ExpertDecision {
  Action action;
  bool off_path = false;
  bool yielding = false;
  bool committed = false;
  double target_speed = 0.0;
};

/// Scripted driver: pure pursuit along `path`; speed target v_pref, lowered
/// behind a leader on the path, and lowered to a stop-line approach (creep,
/// then zero) while any agent's constant-velocity crossing of the inflated
/// junction box overlaps the ego's own predicted crossing padded by
/// ttc_threshold. Once the ego's front is inside the junction box it no longer
/// yields.
ExpertDecision expert_control(const sim::WorldState& world, const sim::LanePath& path,
                              const ExpertParams& params);

inline Action expert_action(const sim::WorldState& world, const ExpertParams& params) {
  return expert_control(world, world.ego_path(), params).action;
}

}  // namespace gcil::expert
