#include <algorithm>
#include <cmath>
#include <numeric>

#include "gcil/graph/encoder.hpp"

namespace gcil::graph {

namespace {

Vec2 to_frame(Vec2 v, double heading, bool ego_frame) {
  if (!ego_frame) return v;
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

void normalize_rows(nn::Tensor2& a) {
  std::vector<double> terms;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    terms.assign(row.begin(), row.end());
    const double total = nn::canonical_sum(terms);
    for (double& x : row) x /= total;
  }
}

}  // namespace

std::string_view to_string(EdgeStrategy s) {
  switch (s) {
    case EdgeStrategy::NCloseWeighted: return "n_close";
    case EdgeStrategy::FullyConnected: return "fully_connected";
    case EdgeStrategy::StarConnected: return "star";
    case EdgeStrategy::NonWeighted: return "non_weighted";
  }
  return "n_close";
}

std::optional<EdgeStrategy> parse_strategy(std::string_view name) {
  for (EdgeStrategy s : kAllStrategies)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

double edge_weight(double d, double alpha) { return std::exp(-(d * d) / (alpha * alpha)); }

EgoFeature ego_feature(const sim::VehicleState& ego, const sim::GoalSpec& goal, double v_pref,
                       bool ego_frame) {
  const Vec2 dg = to_frame(goal.target - ego.position, ego.heading, ego_frame);
  const Vec2 v = to_frame(ego.velocity(), ego.heading, ego_frame);
  return {dg.norm(), dg.x, dg.y, v_pref - ego.speed, v.x, v.y};
}

RelativeFeature relative_feature(const sim::VehicleState& ego, const sim::VehicleState& other,
                                 bool ego_frame) {
  const Vec2 d = to_frame(other.position - ego.position, ego.heading, ego_frame);
  const Vec2 v = to_frame(other.velocity() - ego.velocity(), ego.heading, ego_frame);
  return {d.norm(), d.x, d.y, v.norm(), v.x, v.y};
}

NodeFeatureMatrix build_features(const sim::WorldState& world, const sim::GoalSpec& goal,
                                 double v_pref, bool ego_frame) {
  const std::size_t n = 1 + world.surrounding.size();
  NodeFeatureMatrix s(n, kNodeFeatureDim);
  const auto ego = ego_feature(world.ego, goal, v_pref, ego_frame).values();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(ego.begin(), ego.end(), s.row(i).begin());
    if (i == 0) continue;
    const auto rel = relative_feature(world.ego, world.surrounding[i - 1], ego_frame).values();
    std::copy(rel.begin(), rel.end(), s.row(i).begin() + kEgoFeatureDim);
  }
  return s;
}

AdjacencyMatrix build_adjacency(std::span<const Vec2> positions, const GraphConfig& config) {
  if (positions.empty()) throw std::invalid_argument("adjacency needs at least the ego node");
  if (!(config.alpha_m > 0.0) || config.k < 1)
    throw std::invalid_argument("graph config needs alpha > 0 and k >= 1");

  const std::size_t n = positions.size();
  nn::Tensor2 dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      dist(i, j) = i == j ? 0.0 : (positions[i] - positions[j]).norm();

  AdjacencyMatrix a(n, n);
  const bool weighted = config.strategy != EdgeStrategy::NonWeighted;
  auto link = [&](std::size_t i, std::size_t j) {
    a(i, j) = weighted ? edge_weight(dist(i, j), config.alpha_m) : 1.0;
  };

  if (config.strategy == EdgeStrategy::FullyConnected) {
    a.fill(1.0);
    normalize_rows(a);
    return a;
  }

  for (std::size_t j = 0; j < n; ++j) link(0, j);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i < n; ++i) {
    link(i, i);
    if (config.strategy == EdgeStrategy::StarConnected) {
      link(i, 0);
      continue;
    }
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && (j != 0 || config.ego_as_neighbor)) candidates.push_back(j);
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(config.k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [&](std::size_t x, std::size_t y) {
                        if (dist(i, x) != dist(i, y)) return dist(i, x) < dist(i, y);
                        return x < y;
                      });
    for (std::size_t c = 0; c < keep; ++c) link(i, candidates[c]);
  }
  normalize_rows(a);
  return a;
}

std::vector<Vec2> positions_from_features(const NodeFeatureMatrix& features) {
  std::vector<Vec2> pos(features.rows());
  for (std::size_t i = 1; i < features.rows(); ++i)
    pos[i] = {features(i, kEgoFeatureDim + 1), features(i, kEgoFeatureDim + 2)};
  return pos;
}

Graph encode(const sim::WorldState& world, const sim::GoalSpec& goal, const GraphConfig& config) {
  Graph g;
  g.features = build_features(world, goal, config.v_pref, config.ego_frame);
  g.adjacency = build_adjacency(positions_from_features(g.features), config);
  return g;
}

}  // namespace gcil::graph
