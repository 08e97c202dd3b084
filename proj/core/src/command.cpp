#include "gcil/command.hpp"

#include <algorithm>

namespace gcil {

std::optional<Command> parse_command(std::string_view name) {
  for (Command c : kAllCommands)
    if (to_string(c) == name) return c;
  if (name == "left") return Command::TurnLeft;
  if (name == "right") return Command::TurnRight;
  return std::nullopt;
}

Action clamp_action(Action a) {
  return {std::clamp(a.delta, -1.0, 1.0), std::clamp(a.tau, -1.0, 1.0)};
}

}  // namespace gcil
