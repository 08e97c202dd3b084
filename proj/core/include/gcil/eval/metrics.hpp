#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcil/expert/expert.hpp"
#include "gcil/policy/network.hpp"
#include "gcil/sim/world.hpp"
#include "gcil/train/trainer.hpp"

namespace gcil::eval {

struct Setup {
  std::string name;  // easy, middle, hard
  int density = 3;
  bool operator==(const Setup&) const = default;
};

struct EvalConfig {
  /// Scenario used for trials. Spawn ranges default to intervals disjoint
  /// from the collection ranges, with some traffic on non-crossing lanes.
  sim::ScenarioConfig scenario = evaluation_scenario();
  sim::OutcomeLimits limits;
  std::vector<Setup> setups{{"easy", 3}, {"middle", 5}, {"hard", 7}};
  std::vector<Command> commands{kAllCommands.begin(), kAllCommands.end()};
  std::size_t trials = 70;
  std::uint64_t base_seed = 100000;

  static sim::ScenarioConfig evaluation_scenario();
};

struct TrialResult {
  Command command = Command::Forward;
  std::string setup;
  int density = 3;
  std::uint64_t seed = 0;
  sim::EpisodeOutcome outcome;
  std::optional<double> nav_time;  // set iff the trial succeeded
};

/// Percentages over a non-empty result set; throws std::invalid_argument
/// when it is empty.
double success_rate(std::span<const TrialResult> results);
double collision_rate(std::span<const TrialResult> results);
/// Mean elapsed time of successful trials; nullopt when there are none.
std::optional<double> mean_navigation_time(std::span<const TrialResult> results);

struct CellReport {
  std::string setup;
  std::string method;
  std::string command;  // command name or "AVG"
  double success_rate_pct = 0.0;
  double collision_rate_pct = 0.0;
  std::optional<double> mean_nav_time_s;
  std::size_t trials = 0;
  std::uint64_t base_seed = 0;
};

struct SuiteReport {
  std::string method;
  std::vector<TrialResult> trials;  // sorted by (setup order, command, seed)
  std::vector<CellReport> cells;    // per setup: one row per command, then AVG
};

/// Builds a controller for one trial. Called once per trial, so stateful
/// policies start fresh.
using PolicyFactory = std::function<sim::Controller()>;

struct Policy {
  std::string name;
  PolicyFactory make;
};

Policy learned_policy(std::string name, const policy::PolicyNetwork& network,
                      const graph::GraphConfig& graph);
Policy expert_policy(const expert::ExpertParams& params);
Policy always_brake_policy();

TrialResult run_trial(const Policy& policy, const EvalConfig& config, const Setup& setup,
                      Command command, std::uint64_t seed, bool record_trajectory = false,
                      std::vector<sim::TrajectoryRow>* trajectory = nullptr);

/// Runs trials seeded base_seed + index for every (setup, command) cell.
/// Results do not depend on `jobs`.
SuiteReport run_suite(const Policy& policy, const EvalConfig& config, unsigned jobs = 1);

/// Aggregates raw trials into cells; AVG rows are plain means of the command
/// rows, and the AVG navigation time is absent if any command row lacks one.
std::vector<CellReport> summarize(const std::string& method, std::span<const TrialResult> trials,
                                  const EvalConfig& config);

void write_report_csv(std::ostream& out, std::span<const CellReport> cells);
void write_trials_csv(std::ostream& out, const std::string& method,
                      std::span<const TrialResult> trials);

/// "NA" or the value with two decimals.
std::string format_time(std::optional<double> t);
std::string format_pct(double p);

struct AblationRow {
  graph::EdgeStrategy strategy;
  CellReport cell;
  std::string train_config_json;
};

/// Trains one G-CIL per strategy on the same dataset with otherwise identical
/// settings, then evaluates each on the hard Forward cell.
std::vector<AblationRow> run_ablation(const expert::DemoDataset& dataset,
                                      std::span<const graph::EdgeStrategy> strategies,
                                      const train::TrainConfig& train_config,
                                      const EvalConfig& eval_config, unsigned jobs = 1,
                                      std::ostream* log = nullptr);

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

}  // namespace gcil::eval
