#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gcil/nn/tensor.hpp"
#include "gcil/sim/scenario.hpp"

namespace gcil::graph {

inline constexpr std::size_t kEgoFeatureDim = 6;
inline constexpr std::size_t kNodeFeatureDim = 12;

/// Goal-relative ego state: distance to goal and its components, speed error
/// against the preferred speed (v_pref - v), and the ego velocity.
struct EgoFeature {
  double d_goal = 0, dx_goal = 0, dy_goal = 0, v_err = 0, vx = 0, vy = 0;
  std::array<double, kEgoFeatureDim> values() const { return {d_goal, dx_goal, dy_goal, v_err, vx, vy}; }
};

/// State of one vehicle relative to the ego (other minus ego).
struct RelativeFeature {
  double d_rel = 0, dx_rel = 0, dy_rel = 0, v_rel = 0, vx_rel = 0, vy_rel = 0;
  std::array<double, kEgoFeatureDim> values() const { return {d_rel, dx_rel, dy_rel, v_rel, vx_rel, vy_rel}; }
};

/// N x 12; row i = [ego feature, relative feature of node i]; row 0 is the ego.
using NodeFeatureMatrix = nn::Tensor2;
/// N x N, nonnegative, rows sum to one, positive diagonal.
using AdjacencyMatrix = nn::Tensor2;

enum class EdgeStrategy { NCloseWeighted, FullyConnected, StarConnected, NonWeighted };

std::string_view to_string(EdgeStrategy s);
std::optional<EdgeStrategy> parse_strategy(std::string_view name);
inline constexpr std::array<EdgeStrategy, 4> kAllStrategies = {
    EdgeStrategy::NCloseWeighted, EdgeStrategy::FullyConnected, EdgeStrategy::StarConnected,
    EdgeStrategy::NonWeighted};

struct GraphConfig {
  EdgeStrategy strategy = EdgeStrategy::NCloseWeighted;
  double alpha_m = 10.0;
  int k = 3;
  /// Whether non-ego nodes may pick the ego as one of their k nearest.
  bool ego_as_neighbor = true;
  /// Express features in the ego's heading frame instead of the world frame.
  bool ego_frame = false;
  double v_pref = 6.0;

  bool operator==(const GraphConfig&) const = default;
};

/// exp(-d^2 / alpha^2)
double edge_weight(double d, double alpha);

EgoFeature ego_feature(const sim::VehicleState& ego, const sim::GoalSpec& goal, double v_pref,
                       bool ego_frame = false);
RelativeFeature relative_feature(const sim::VehicleState& ego, const sim::VehicleState& other,
                                 bool ego_frame = false);

/// Node features with the ego at row 0 and surrounding vehicles in world order.
NodeFeatureMatrix build_features(const sim::WorldState& world, const sim::GoalSpec& goal,
                                 double v_pref, bool ego_frame = false);

/// Adjacency for node positions (index 0 = ego). Nearest-neighbor ties go to
/// the lower index. Every row is normalized to sum to one.
AdjacencyMatrix build_adjacency(std::span<const Vec2> positions, const GraphConfig& config);

/// Node positions relative to the ego recovered from a feature matrix;
/// pairwise distances match the world positions the features came from.
std::vector<Vec2> positions_from_features(const NodeFeatureMatrix& features);

/// Convenience: features plus adjacency for a world under a graph config.
struct Graph {
  NodeFeatureMatrix features;
  AdjacencyMatrix adjacency;
};
Graph encode(const sim::WorldState& world, const sim::GoalSpec& goal, const GraphConfig& config);

}  // namespace gcil::graph
