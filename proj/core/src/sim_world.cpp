#include <iomanip>
#include <limits>
#include <ostream>

#include "gcil/sim/world.hpp"

namespace gcil::sim {

namespace {

// Closest vehicle ahead of `self` on the same path, measured in arc length.
std::optional<Leader> find_leader(const WorldState& w, std::size_t self, double self_arc) {
  const AgentPlan& plan = w.plans[self];
  const LanePath& path = w.layout->path(plan.arm, plan.maneuver);
  std::optional<Leader> best;
  auto consider = [&](const VehicleState& v) {
    const auto proj = path.line.project(v.position);
    if (proj.distance > 0.5 * w.layout->lane_width()) return;
    const double gap = proj.arc - self_arc;
    if (gap <= 0.0) return;
    if (!best || gap < best->gap) best = Leader{gap, v.speed};
  };
  for (std::size_t j = 0; j < w.surrounding.size(); ++j) {
    if (j == self) continue;
    if (w.plans[j].arm != plan.arm || w.plans[j].maneuver != plan.maneuver) continue;
    consider(w.surrounding[j]);
  }
  if (w.agents_follow_ego) consider(w.ego);
  return best;
}

}  // namespace

std::vector<Action> advance(WorldState& w, Action ego_action) {
  std::vector<Action> actions(w.surrounding.size());
  for (std::size_t i = 0; i < w.surrounding.size(); ++i) {
    AgentPlan& plan = w.plans[i];
    if (plan.off_path) continue;
    const LanePath& path = w.layout->path(plan.arm, plan.maneuver);
    const double arc = path.line.project(w.surrounding[i].position).arc;
    const auto ctl = surrounding_control(w.surrounding[i], path, plan.cruise_speed,
                                         find_leader(w, i, arc), w.agent_params, w.vehicle);
    if (ctl.off_path) plan.off_path = true;
    actions[i] = ctl.action;
  }

  const double before = (w.ego.position - w.goal.target).norm();
  w.ego = step_vehicle(w.ego, ego_action, w.dt, w.vehicle);
  for (std::size_t i = 0; i < w.surrounding.size(); ++i)
    w.surrounding[i] = step_vehicle(w.surrounding[i], actions[i], w.dt, w.vehicle);

  ++w.step;
  w.time = static_cast<double>(w.step) * w.dt;
  const double after = (w.ego.position - w.goal.target).norm();
  w.ego_receding_s = after > before ? w.ego_receding_s + w.dt : 0.0;
  return actions;
}

EpisodeResult run_episode(WorldState world, const Controller& controller,
                          const OutcomeLimits& limits, bool record_trajectory) {
  EpisodeResult result;
  auto record = [&](const VehicleState& v, Action a) {
    result.trajectory.push_back(
        {world.step, v.id, v.position.x, v.position.y, v.heading, v.speed, a.delta, a.tau});
  };
  for (;;) {
    if (auto done = check_outcome(world, world.goal, limits)) {
      result.outcome = *done;
      return result;
    }
    const Action ego_action = clamp_action(controller(world));
    if (record_trajectory) {
      // Agent actions are only known after control; record the pre-step
      // state and fill the actions in below.
      const std::size_t first = result.trajectory.size();
      record(world.ego, ego_action);
      for (const auto& v : world.surrounding) record(v, {});
      const auto agent_actions = advance(world, ego_action);
      for (std::size_t i = 0; i < agent_actions.size(); ++i) {
        result.trajectory[first + 1 + i].delta = agent_actions[i].delta;
        result.trajectory[first + 1 + i].tau = agent_actions[i].tau;
      }
    } else {
      advance(world, ego_action);
    }
  }
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "step,vehicle_id,x,y,heading,speed,delta,tau\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows)
    out << r.step << ',' << r.vehicle_id << ',' << r.x << ',' << r.y << ',' << r.heading << ','
        << r.speed << ',' << r.delta << ',' << r.tau << '\n';
}

}  // namespace gcil::sim
