#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace gcil {

/// High-level navigation command; selects the policy branch.
enum class Command { Forward = 0, TurnLeft = 1, TurnRight = 2 };

inline constexpr std::array<Command, 3> kAllCommands = {Command::Forward, Command::TurnLeft,
                                                        Command::TurnRight};
inline constexpr std::size_t kNumCommands = 3;

constexpr std::size_t index_of(Command c) { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(Command c) {
  switch (c) {
    case Command::Forward: return "forward";
    case Command::TurnLeft: return "turn_left";
    case Command::TurnRight: return "turn_right";
  }
  return "forward";
}

std::optional<Command> parse_command(std::string_view name);

/// Normalized control: steering and throttle, both in [-1, 1].
/// Positive delta steers left (counter-clockwise), positive tau accelerates.
struct Action {
  double delta = 0.0;
  double tau = 0.0;

  bool operator==(const Action&) const = default;
};

Action clamp_action(Action a);

}  // namespace gcil
