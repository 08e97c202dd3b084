#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "gcil/sim/scenario.hpp"

namespace gcil::sim {

enum class OutcomeTag { Success, Collision, Timeout, GoalMissed };

constexpr std::string_view to_string(OutcomeTag t) {
  switch (t) {
    case OutcomeTag::Success: return "success";
    case OutcomeTag::Collision: return "collision";
    case OutcomeTag::Timeout: return "timeout";
    case OutcomeTag::GoalMissed: return "goal_missed";
  }
  return "timeout";
}
std::optional<OutcomeTag> parse_outcome(std::string_view name);

struct EpisodeOutcome {
  OutcomeTag tag = OutcomeTag::Timeout;
  double elapsed = 0.0;
  std::uint64_t steps = 0;
  bool operator==(const EpisodeOutcome&) const = default;
};

struct OutcomeLimits {
  double timeout_s = 30.0;
  double receding_window_s = 2.0;
};

/// Terminal classification with precedence Collision > Success > Timeout >
/// GoalMissed. Returns nullopt while the episode is ongoing.
std::optional<EpisodeOutcome> check_outcome(const WorldState& world, const GoalSpec& goal,
                                            const OutcomeLimits& limits);

}  // namespace gcil::sim
