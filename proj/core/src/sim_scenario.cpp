#include <algorithm>
#include <string>

#include "gcil/sim/scenario.hpp"

namespace gcil::sim {

namespace {

constexpr int kMaxSpawnAttempts = 40;
constexpr int kMaxAgentDraws = 50;
constexpr double kSmallLength = 1.8;
constexpr double kSmallWidth = 0.6;

bool supported_density(int density) { return density == 3 || density == 5 || density == 7; }

VehicleState place_on_path(int id, const LanePath& path, double distance_before_box, double speed,
                           double length, double width, Role role) {
  const double arc = path.box_entry - distance_before_box;
  VehicleState v;
  v.id = id;
  v.position = path.line.point_at(arc);
  v.heading = normalize_angle(path.line.heading_at(arc));
  v.speed = speed;
  v.length = length;
  v.width = width;
  v.role = role;
  return v;
}

}  // namespace

double IntervalSet::total_length() const {
  double total = 0.0;
  for (const auto& p : parts) total += p.hi - p.lo;
  return total;
}

double IntervalSet::sample(Rng& rng) const {
  if (parts.empty()) throw ScenarioError("empty interval set");
  const double total = total_length();
  if (total <= 0.0) return parts.front().lo;
  double u = rng.uniform() * total;
  for (const auto& p : parts) {
    const double len = p.hi - p.lo;
    if (u < len) return p.lo + u;
    u -= len;
  }
  return parts.back().hi;
}

bool IntervalSet::contains(double v) const {
  return std::any_of(parts.begin(), parts.end(),
                     [v](const Interval& p) { return v >= p.lo && v <= p.hi; });
}

bool WorldState::same_state(const WorldState& o) const {
  return step == o.step && time == o.time && dt == o.dt && ego == o.ego &&
         surrounding == o.surrounding && plans == o.plans && ego_arm == o.ego_arm &&
         command == o.command && goal == o.goal && ego_receding_s == o.ego_receding_s;
}

bool paths_conflict(const IntersectionLayout& layout, const LanePath& ego, const LanePath& other,
                    double conflict_distance) {
  (void)layout;
  return IntersectionLayout::path_separation(ego, other) < conflict_distance;
}

Scenario spawn_scenario(const ScenarioConfig& config, Command command, std::uint64_t seed) {
  const TrafficConfig& traffic = config.traffic;
  if (!supported_density(traffic.density))
    throw ScenarioError("unsupported traffic density " + std::to_string(traffic.density) +
                        " (expected 3, 5 or 7)");
  if (traffic.spawn_arms.empty()) throw ScenarioError("traffic.spawn_arms is empty");

  auto layout = std::make_shared<const IntersectionLayout>(config.layout.lane_width,
                                                           config.layout.arm_length);
  const LanePath& ego_path = layout->path(config.ego_arm, command);

  struct Candidate {
    Arm arm;
    Command maneuver;
  };
  std::vector<Candidate> conflicting;
  std::vector<Candidate> clear;
  for (Arm arm : traffic.spawn_arms) {
    for (Command m : kAllCommands) {
      const bool hit = paths_conflict(*layout, ego_path, layout->path(arm, m),
                                      traffic.conflict_distance_m);
      (hit ? conflicting : clear).push_back({arm, m});
    }
  }

  Rng rng(seed);
  for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
    // Dense traffic may not fit on the conflicting lanes alone; after half
    // the attempts, spread agents onto non-conflicting lanes as well.
    const double clear_fraction = attempt < kMaxSpawnAttempts / 2
                                      ? traffic.non_conflicting_fraction
                                      : std::max(traffic.non_conflicting_fraction, 0.5);
    Scenario sc;
    WorldState& w = sc.world;
    w.dt = config.episode.dt;
    w.layout = layout;
    w.ego_arm = config.ego_arm;
    w.command = command;
    w.vehicle = config.vehicle;
    w.agent_params = config.agents;
    w.agents_follow_ego = traffic.agents_follow_ego;

    const double ego_back = traffic.ego_spawn_m.sample(rng);
    const double ego_speed = rng.uniform(traffic.ego_speed_range.lo, traffic.ego_speed_range.hi);
    w.ego = place_on_path(0, ego_path, ego_back, ego_speed, config.vehicle.length,
                          config.vehicle.width, Role::Ego);

    const double goal_offset = traffic.goal_offset_m.sample(rng);
    w.goal.target = ego_path.line.point_at(ego_path.box_exit + goal_offset);
    w.goal.success_radius = config.episode.success_radius_m;

    std::vector<Vec2> placed{w.ego.position};
    bool complete = true;
    for (int i = 0; i < traffic.density && complete; ++i) {
      complete = false;
      for (int draw = 0; draw < kMaxAgentDraws; ++draw) {
        const bool want_clear = !clear.empty() && rng.uniform() < clear_fraction;
        const auto& pool = (want_clear || conflicting.empty()) ? clear : conflicting;
        const Candidate pick = pool[rng.index(pool.size())];
        const double back = traffic.agent_spawn_m.sample(rng);
        const double cruise =
            rng.uniform(traffic.cruise_speed_range.lo, traffic.cruise_speed_range.hi);
        const bool small = rng.uniform() < traffic.small_agent_fraction;
        const LanePath& path = layout->path(pick.arm, pick.maneuver);
        VehicleState v = place_on_path(i + 1, path, back, cruise,
                                       small ? kSmallLength : config.vehicle.length,
                                       small ? kSmallWidth : config.vehicle.width,
                                       Role::Surrounding);
        const bool separated = std::all_of(placed.begin(), placed.end(), [&](Vec2 p) {
          return (p - v.position).norm() >= traffic.min_separation_m;
        });
        if (!separated) continue;
        placed.push_back(v.position);
        w.surrounding.push_back(v);
        w.plans.push_back({pick.arm, pick.maneuver, cruise, &pool == &conflicting, false});
        complete = true;
        break;
      }
    }
    if (!complete) continue;

    sc.goal = w.goal;
    sc.command = command;
    return sc;
  }
  throw ScenarioError("could not satisfy min_separation_m=" +
                      std::to_string(traffic.min_separation_m) + " after " +
                      std::to_string(kMaxSpawnAttempts) + " attempts");
}

}  // namespace gcil::sim
