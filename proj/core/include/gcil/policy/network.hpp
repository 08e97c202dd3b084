#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcil/command.hpp"
#include "gcil/graph/encoder.hpp"
#include "gcil/nn/layers.hpp"

namespace gcil::policy {

enum class NetworkKind { Gcil, NnCil, SetCil };

std::string_view to_string(NetworkKind k);
std::optional<NetworkKind> parse_network_kind(std::string_view name);

inline constexpr std::size_t kNnCilInputDim = 24;
inline constexpr std::size_t kNnCilNeighbors = 3;

/// Perception inputs for one time step. The ego feature x^ego is row 0,
/// columns 0..5 of the feature matrix.
struct Observation {
  graph::NodeFeatureMatrix features;
  graph::AdjacencyMatrix adjacency;

  std::array<double, graph::kEgoFeatureDim> ego() const;
  std::size_t nodes() const { return features.rows(); }
};

Observation observe(const sim::WorldState& world, const sim::GoalSpec& goal,
                    const graph::GraphConfig& config);

/// x^ego followed by the relative features of the three nearest surrounding
/// vehicles (ascending distance, ties to the lower row), zero-padded.
std::array<double, kNnCilInputDim> nncil_input(const graph::NodeFeatureMatrix& features);
std::array<double, kNnCilInputDim> nncil_input(const sim::WorldState& world,
                                               const sim::GoalSpec& goal, double v_pref);

/// Set-CIL elements: x^ego followed by every surrounding x_i, one per row.
nn::Tensor2 set_elements(const graph::NodeFeatureMatrix& features);

/// Layer widths. The GCN output width and trunk widths fix the perception
/// vector sizes; see the factory functions for the defaults.
struct NetworkShape {
  std::vector<std::size_t> gcn{32, 32, 10};
  std::vector<std::size_t> encoder{64, 64, 64};
  std::vector<std::size_t> trunk{128, 256, 64, 64};
  std::size_t branch_hidden = 64;
  /// Fixed factor applied to the raw node features before the first layer.
  /// Raw distances of tens of meters otherwise saturate the tanh head of a
  /// freshly initialized network. A power of two keeps the scaling exact.
  double input_scale = 0.125;

  bool operator==(const NetworkShape&) const = default;
};

struct PerceptionCache {
  std::vector<nn::GcnCache> gcn;
  std::vector<nn::DenseCache> encoder;
};

struct BatchCache {
  std::uint64_t generation = 0;
  const void* owner = nullptr;
  std::size_t batch = 0;
  std::vector<PerceptionCache> perception;
  std::vector<nn::DenseCache> trunk;
  std::array<std::vector<std::size_t>, kNumCommands> branch_rows;
  std::array<std::vector<nn::DenseCache>, kNumCommands> branch;
};

class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A command-conditional policy: a perception module (GCN stack, fixed-size
/// MLP, or sum-pooled set encoder) feeding a shared trunk and one two-layer
/// branch per command with a tanh output. Gradients are held in a
/// zero-initialized copy of the same network (see zeros_like).
class PolicyNetwork {
 public:
  static PolicyNetwork make(NetworkKind kind, std::uint64_t seed, NetworkShape shape = {});

  NetworkKind kind() const { return kind_; }
  const NetworkShape& shape() const { return shape_; }
  std::size_t perception_dim() const;

  PolicyNetwork zeros_like() const;
  void zero();

  struct Forward {
    nn::Tensor2 actions;  // B x 2
    BatchCache cache;
  };

  /// Batched forward; each row uses the branch of its command.
  Forward forward(std::span<const Observation* const> observations,
                  std::span<const Command> commands) const;
  Forward forward(const Observation& observation, Command command) const;
  Action act(const Observation& observation, Command command) const;

  /// Accumulates parameter gradients into `grads` (a zeros_like copy).
  /// Throws StaleCacheError when the cache predates a parameter change.
  void backward(const BatchCache& cache, const nn::Tensor2& grad_actions,
                PolicyNetwork& grads) const;

  /// Perception vector p (1 x perception_dim) for one observation.
  nn::Tensor2 perceive(const Observation& observation, PerceptionCache* cache = nullptr) const;

  /// Parameters in a fixed order with stable names. Non-const access marks
  /// outstanding caches stale.
  std::vector<nn::Tensor2*> parameters();
  std::vector<const nn::Tensor2*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  std::vector<nn::GcnLayer>& gcn_layers() { ++generation_; return gcn_; }
  std::vector<nn::DenseLayer>& encoder_layers() { ++generation_; return encoder_; }
  std::vector<nn::DenseLayer>& trunk_layers() { ++generation_; return trunk_; }
  std::vector<nn::DenseLayer>& branch_layers(Command c) { ++generation_; return branches_[index_of(c)]; }
  const std::vector<nn::GcnLayer>& gcn_layers() const { return gcn_; }
  const std::vector<nn::DenseLayer>& encoder_layers() const { return encoder_; }
  const std::vector<nn::DenseLayer>& trunk_layers() const { return trunk_; }
  const std::vector<nn::DenseLayer>& branch_layers(Command c) const { return branches_[index_of(c)]; }

  std::uint64_t generation() const { return generation_; }

  /// Bitwise equality of kind, shape and every parameter.
  bool same_weights(const PolicyNetwork& other) const;

 private:
  PolicyNetwork() = default;
  template <class Self, class Ptr>
  static std::vector<Ptr> collect(Self& self);
  void perceive_backward(const PerceptionCache& cache, const nn::Tensor2& grad_p,
                         PolicyNetwork& grads) const;

  NetworkKind kind_ = NetworkKind::Gcil;
  NetworkShape shape_;
  std::vector<nn::GcnLayer> gcn_;
  std::vector<nn::DenseLayer> encoder_;
  std::vector<nn::DenseLayer> trunk_;
  std::array<std::vector<nn::DenseLayer>, kNumCommands> branches_;
  std::uint64_t generation_ = 0;
};

}  // namespace gcil::policy
