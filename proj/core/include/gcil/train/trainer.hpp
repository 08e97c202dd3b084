#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gcil/expert/dataset.hpp"
#include "gcil/nn/adam.hpp"
#include "gcil/policy/network.hpp"
#include "gcil/train/checkpoint.hpp"

namespace gcil::train {

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t epochs = 50;
  /// Overrides the epoch-derived step budget when nonzero.
  std::size_t max_steps = 0;
  nn::AdamConfig adam;
  std::size_t eval_every = 500;  // checkpoint interval in steps
  std::uint64_t seed = 1;
  policy::NetworkKind network = policy::NetworkKind::Gcil;
  policy::NetworkShape shape;
  /// Adjacency is rebuilt from the recorded positions under this config, so
  /// one dataset serves every edge strategy.
  graph::GraphConfig graph;
};

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-command sample counts for a step. The batch is split as evenly as
/// possible; when it does not divide by three, the commands that receive the
/// extra samples rotate with the step so the long-run share is equal.
std::array<std::size_t, kNumCommands> batch_split(std::size_t batch_size, std::uint64_t step);

struct Minibatch {
  std::vector<std::size_t> indices;  // into the command's buffer
  std::vector<Command> commands;     // parallel to indices
  std::array<std::size_t, kNumCommands> counts{};
};

/// Draws a batch with replacement, command blocks in canonical order.
/// Throws TrainError if a buffer is empty.
Minibatch sample_minibatch(const std::array<std::size_t, kNumCommands>& buffer_sizes,
                           std::size_t batch_size, std::uint64_t step, Rng& rng);

struct LossRecord {
  std::uint64_t step = 0;  // 1-based optimizer step
  double mean_loss = 0.0;
  std::array<double, kNumCommands> command_loss{};
  double wall_clock_s = 0.0;
};

void write_loss_header(std::ostream& out);
void write_loss_row(std::ostream& out, const LossRecord& r);

/// Observations of a dataset re-encoded for a graph config.
struct EncodedDataset {
  std::array<std::vector<policy::Observation>, kNumCommands> observations;
  std::array<std::vector<Action>, kNumCommands> targets;

  std::array<std::size_t, kNumCommands> sizes() const;
  std::size_t size() const;
};
EncodedDataset encode_dataset(const expert::DemoDataset& dataset, const graph::GraphConfig& graph);

/// Behavior-cloning loop state. One Adam step over all parameters per
/// minibatch; only the branches present in the batch receive gradient.
class Trainer {
 public:
  Trainer(const EncodedDataset& data, TrainConfig config);
  /// Continues from a checkpoint; the network kind must match the config.
  Trainer(const EncodedDataset& data, TrainConfig config, const Checkpoint& resume);

  std::uint64_t step() const { return step_; }
  std::size_t steps_per_epoch() const;
  std::size_t total_steps() const;
  bool done() const { return step_ >= total_steps(); }

  /// Runs one optimizer step. Throws TrainError on a non-finite loss, before
  /// any parameter is changed.
  LossRecord train_step();

  const policy::PolicyNetwork& network() const { return net_; }
  const TrainConfig& config() const { return config_; }
  Checkpoint checkpoint() const;

 private:
  const EncodedDataset* data_;
  TrainConfig config_;
  policy::PolicyNetwork net_;
  policy::PolicyNetwork grads_;
  nn::Adam adam_;
  Rng rng_;
  std::uint64_t step_ = 0;
};

struct TrainRun {
  std::uint64_t steps = 0;
  std::vector<LossRecord> history;
  std::vector<std::filesystem::path> checkpoints;
  double wall_clock_s = 0.0;
  Checkpoint final_state;
};

struct TrainOptions {
  /// Checkpoints and loss.csv go here when set.
  std::optional<std::filesystem::path> out_dir;
  std::optional<Checkpoint> resume;
  /// Progress lines every this many steps (0 = silent).
  std::size_t log_every = 0;
  std::ostream* log = nullptr;
};

/// Trains to the configured budget. On a non-finite loss a diagnostic
/// checkpoint is written to out_dir (if set) and TrainError is thrown.
TrainRun train(const expert::DemoDataset& dataset, const TrainConfig& config,
               const TrainOptions& options = {});
TrainRun train(const EncodedDataset& data, const TrainConfig& config,
               const TrainOptions& options = {});

}  // namespace gcil::train
