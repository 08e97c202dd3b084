#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "gcil/sim/outcome.hpp"
#include "gcil/sim/scenario.hpp"

namespace gcil::sim {

/// Advances every vehicle by one dt: agents are controlled from the
/// pre-step state, then all vehicles are integrated. Returns the actions
/// applied to the surrounding agents, parallel to world.surrounding.
std::vector<Action> advance(WorldState& world, Action ego_action);

struct TrajectoryRow {
  std::uint64_t step = 0;
  int vehicle_id = 0;
  double x = 0, y = 0, heading = 0, speed = 0;
  double delta = 0, tau = 0;
};

using Controller = std::function<Action(const WorldState&)>;

struct EpisodeResult {
  EpisodeOutcome outcome;
  std::vector<TrajectoryRow> trajectory;  // filled when requested
};

/// Runs a controller until a terminal outcome. The controller is called once
/// per step with the current state before integration.
EpisodeResult run_episode(WorldState world, const Controller& controller,
                          const OutcomeLimits& limits, bool record_trajectory = false);

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);

}  // namespace gcil::sim
