#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "gcil/rng.hpp"
#include "gcil/sim/layout.hpp"
#include "gcil/sim/traffic.hpp"
#include "gcil/sim/vehicle.hpp"

namespace gcil::sim {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Union of disjoint closed intervals; sampled uniformly by length.
struct IntervalSet {
  std::vector<Interval> parts;

  double total_length() const;
  double sample(Rng& rng) const;
  bool contains(double v) const;
  bool operator==(const IntervalSet&) const = default;
};

struct LayoutConfig {
  double lane_width = 3.5;
  double arm_length = 40.0;
};

struct EpisodeConfig {
  double dt = 0.1;
  double timeout_s = 30.0;
  double success_radius_m = 2.0;
};

struct TrafficConfig {
  int density = 3;
  double min_separation_m = 6.0;
  Interval cruise_speed_range{4.0, 6.0};
  Interval ego_speed_range{3.0, 5.0};
  // Distances measured backwards from the junction box entry along each
  // approach lane, and forward from the box exit for the goal.
  IntervalSet ego_spawn_m{{{8.0, 12.0}, {14.0, 18.0}}};
  IntervalSet agent_spawn_m{{{2.0, 8.0}, {12.0, 18.0}, {22.0, 28.0}}};
  IntervalSet goal_offset_m{{{8.0, 10.0}, {12.0, 14.0}}};
  std::vector<Arm> spawn_arms{Arm::East, Arm::North, Arm::West};
  double non_conflicting_fraction = 0.0;
  double small_agent_fraction = 0.0;  // agents using the 1.8 x 0.6 m footprint
  double conflict_distance_m = 3.0;   // paths closer than this conflict
  bool agents_follow_ego = false;
};

struct ScenarioConfig {
  LayoutConfig layout;
  EpisodeConfig episode;
  TrafficConfig traffic;
  VehicleParams vehicle;
  SurroundingParams agents;
  Arm ego_arm = Arm::South;
};

struct GoalSpec {
  Vec2 target;
  double success_radius = 2.0;
  bool operator==(const GoalSpec&) const = default;
};

/// Path assignment and set-point for one surrounding agent.
struct AgentPlan {
  Arm arm = Arm::East;
  Command maneuver = Command::Forward;
  double cruise_speed = 0.0;
  bool conflicting = true;
  bool off_path = false;
  bool operator==(const AgentPlan&) const = default;
};

struct WorldState {
  std::uint64_t step = 0;
  double time = 0.0;  // step * dt
  double dt = 0.1;
  VehicleState ego;
  std::vector<VehicleState> surrounding;
  std::vector<AgentPlan> plans;  // parallel to surrounding
  std::shared_ptr<const IntersectionLayout> layout;
  Arm ego_arm = Arm::South;
  Command command = Command::Forward;
  GoalSpec goal;
  double ego_receding_s = 0.0;  // continuous time the ego has moved away from the goal
  VehicleParams vehicle;
  SurroundingParams agent_params;
  bool agents_follow_ego = false;

  const LanePath& ego_path() const { return layout->path(ego_arm, command); }

  /// Compares every dynamic field bit-for-bit.
  bool same_state(const WorldState& other) const;
};

struct Scenario {
  WorldState world;
  GoalSpec goal;
  Command command = Command::Forward;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Places the ego on its approach lane and `density` surrounding agents on
/// the configured arms. Deterministic in (config, command, seed). Agents take
/// lanes that conflict with the ego path, except for a non_conflicting_fraction
/// share; when dense traffic cannot be packed onto the conflicting lanes the
/// later retries raise that share to one half.
/// Throws ScenarioError for an unsupported density or when the minimum
/// separation cannot be met after bounded retries.
Scenario spawn_scenario(const ScenarioConfig& config, Command command, std::uint64_t seed);

/// Whether a surrounding path comes within conflict_distance of the ego path.
bool paths_conflict(const IntersectionLayout& layout, const LanePath& ego, const LanePath& other,
                    double conflict_distance);

}  // namespace gcil::sim
