#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcil/graph/encoder.hpp"
#include "gcil/nn/adam.hpp"
#include "gcil/policy/network.hpp"

namespace gcil::train {

inline constexpr int kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network weights plus everything needed to continue training exactly:
/// Adam moments and step counter, the sampler's generator state and the
/// training step.
struct Checkpoint {
  policy::PolicyNetwork network = policy::PolicyNetwork::make(policy::NetworkKind::Gcil, 0);
  graph::GraphConfig graph;
  nn::AdamConfig adam_config;
  std::uint64_t adam_steps = 0;
  std::vector<nn::Tensor2> adam_m;
  std::vector<nn::Tensor2> adam_v;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::string rng_state;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
/// Throws CheckpointError naming the offending field. When `expected` is
/// set, a checkpoint of another network kind is rejected.
Checkpoint checkpoint_from_json(const std::string& text,
                                std::optional<policy::NetworkKind> expected = std::nullopt);

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint checkpoint_load(const std::filesystem::path& path,
                           std::optional<policy::NetworkKind> expected = std::nullopt);

}  // namespace gcil::train
