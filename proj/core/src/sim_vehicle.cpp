#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gcil/sim/vehicle.hpp"

namespace gcil::sim {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite ") + what);
}

}  // namespace

VehicleState step_vehicle(const VehicleState& state, Action action, double dt,
                          const VehicleParams& params) {
  require_finite(state.position.x, "position.x");
  require_finite(state.position.y, "position.y");
  require_finite(state.heading, "heading");
  require_finite(state.speed, "speed");
  require_finite(action.delta, "steering");
  require_finite(action.tau, "throttle");
  require_finite(dt, "dt");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");

  const Action u = clamp_action(action);
  const double phi = u.delta * params.phi_max();
  const double v = state.speed;
  const double omega = v * std::tan(phi) / params.wheelbase;
  const double theta = state.heading;

  VehicleState next = state;
  if (std::abs(omega * dt) < 1e-12) {
    next.position.x += v * dt * std::cos(theta);
    next.position.y += v * dt * std::sin(theta);
  } else {
    const double radius = v / omega;
    const double theta1 = theta + omega * dt;
    next.position.x += radius * (std::sin(theta1) - std::sin(theta));
    next.position.y += radius * (std::cos(theta) - std::cos(theta1));
  }
  next.heading = normalize_angle(theta + omega * dt);

  const double accel = u.tau >= 0.0 ? u.tau * params.a_max : u.tau * params.b_max;
  next.speed = std::clamp(v + accel * dt, 0.0, params.v_max);
  return next;
}

bool detect_collision(const VehicleState& a, const VehicleState& b) {
  const Vec2 a_axes[2] = {unit_from_heading(a.heading), rotate_quarter(unit_from_heading(a.heading))};
  const Vec2 b_axes[2] = {unit_from_heading(b.heading), rotate_quarter(unit_from_heading(b.heading))};
  const double a_half[2] = {0.5 * a.length, 0.5 * a.width};
  const double b_half[2] = {0.5 * b.length, 0.5 * b.width};
  const Vec2 offset = b.position - a.position;

  const std::array<Vec2, 4> axes = {a_axes[0], a_axes[1], b_axes[0], b_axes[1]};
  for (const Vec2& n : axes) {
    const double ra = a_half[0] * std::abs(a_axes[0].dot(n)) + a_half[1] * std::abs(a_axes[1].dot(n));
    const double rb = b_half[0] * std::abs(b_axes[0].dot(n)) + b_half[1] * std::abs(b_axes[1].dot(n));
    if (std::abs(offset.dot(n)) > ra + rb) return false;
  }
  return true;
}

}  // namespace gcil::sim
