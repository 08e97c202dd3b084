#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gcil/eval/metrics.hpp"
#include "gcil/expert/dataset.hpp"
#include "gcil/train/trainer.hpp"

namespace gcil::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every tunable of a run, grouped in the sections of the config file:
/// layout, episode, traffic, vehicle, graph, expert, train, eval.
struct RunConfig {
  sim::ScenarioConfig scenario;  // collection scenario
  graph::GraphConfig graph;
  expert::ExpertParams expert;
  std::size_t episodes_per_command = 100;
  std::array<int, kNumCommands> collect_density{5, 3, 3};
  std::uint64_t collect_seed = 1;
  train::TrainConfig train;
  eval::EvalConfig eval;
};

/// Pretty-printed JSON with every key, in a fixed order.
std::string to_json(const RunConfig& config);

/// Parses a (possibly partial) config document over the defaults. Unknown
/// keys are rejected with the nearest valid key; wrong types and invalid
/// values name their field.
RunConfig from_json(const std::string& text, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

/// Applies a single "section.key=value" override, value in JSON syntax
/// (bare words are taken as strings).
RunConfig apply_override(const RunConfig& config, std::string_view assignment);

/// Training section only, used to audit ablation runs.
std::string train_to_json(const train::TrainConfig& config);

expert::CollectConfig collect_config(const RunConfig& config);

std::size_t edit_distance(std::string_view a, std::string_view b);
/// Candidate with the smallest edit distance (ties to the earlier one).
std::string nearest(std::string_view key, const std::vector<std::string>& candidates);

}  // namespace gcil::config
