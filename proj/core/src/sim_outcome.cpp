#include "gcil/sim/outcome.hpp"

namespace gcil::sim {

std::optional<OutcomeTag> parse_outcome(std::string_view name) {
  for (OutcomeTag t : {OutcomeTag::Success, OutcomeTag::Collision, OutcomeTag::Timeout,
                       OutcomeTag::GoalMissed})
    if (to_string(t) == name) return t;
  return std::nullopt;
}

std::optional<EpisodeOutcome> check_outcome(const WorldState& world, const GoalSpec& goal,
                                            const OutcomeLimits& limits) {
  const EpisodeOutcome base{OutcomeTag::Timeout, world.time, world.step};
  for (const auto& other : world.surrounding) {
    if (detect_collision(world.ego, other)) {
      auto o = base;
      o.tag = OutcomeTag::Collision;
      return o;
    }
  }
  const double dist = (world.ego.position - goal.target).norm();
  if (dist < goal.success_radius) {
    auto o = base;
    o.tag = OutcomeTag::Success;
    return o;
  }
  if (world.time >= limits.timeout_s) return base;
  if (world.layout && dist > world.layout->arm_length() &&
      !world.layout->inside_box(world.ego.position) &&
      world.ego_receding_s >= limits.receding_window_s) {
    auto o = base;
    o.tag = OutcomeTag::GoalMissed;
    return o;
  }
  return std::nullopt;
}

}  // namespace gcil::sim
