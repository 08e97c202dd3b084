#include <algorithm>
#include <cstring>
#include <numeric>

#include "gcil/policy/network.hpp"

namespace gcil::policy {

using nn::Activation;
using nn::Tensor2;

std::string_view to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::Gcil: return "gcil";
    case NetworkKind::NnCil: return "nncil";
    case NetworkKind::SetCil: return "setcil";
  }
  return "gcil";
}

std::optional<NetworkKind> parse_network_kind(std::string_view name) {
  for (NetworkKind k : {NetworkKind::Gcil, NetworkKind::NnCil, NetworkKind::SetCil})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::array<double, graph::kEgoFeatureDim> Observation::ego() const {
  std::array<double, graph::kEgoFeatureDim> e{};
  for (std::size_t c = 0; c < e.size(); ++c) e[c] = features(0, c);
  return e;
}

Observation observe(const sim::WorldState& world, const sim::GoalSpec& goal,
                    const graph::GraphConfig& config) {
  auto g = graph::encode(world, goal, config);
  return {std::move(g.features), std::move(g.adjacency)};
}

std::array<double, kNnCilInputDim> nncil_input(const graph::NodeFeatureMatrix& features) {
  constexpr std::size_t d = graph::kEgoFeatureDim;
  std::array<double, kNnCilInputDim> x{};
  for (std::size_t c = 0; c < d; ++c) x[c] = features(0, c);
  std::vector<std::size_t> rows(features.rows() > 0 ? features.rows() - 1 : 0);
  std::iota(rows.begin(), rows.end(), std::size_t{1});
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return features(a, d) < features(b, d);
  });
  for (std::size_t slot = 0; slot < kNnCilNeighbors && slot < rows.size(); ++slot)
    for (std::size_t c = 0; c < d; ++c) x[d * (slot + 1) + c] = features(rows[slot], d + c);
  return x;
}

std::array<double, kNnCilInputDim> nncil_input(const sim::WorldState& world,
                                               const sim::GoalSpec& goal, double v_pref) {
  sim::WorldState sorted = world;
  std::vector<std::size_t> order(world.surrounding.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return world.surrounding[a].id < world.surrounding[b].id;
  });
  for (std::size_t i = 0; i < order.size(); ++i) sorted.surrounding[i] = world.surrounding[order[i]];
  return nncil_input(graph::build_features(sorted, goal, v_pref));
}

Tensor2 set_elements(const graph::NodeFeatureMatrix& features) {
  constexpr std::size_t d = graph::kEgoFeatureDim;
  Tensor2 e(features.rows(), d);
  for (std::size_t c = 0; c < d; ++c) e(0, c) = features(0, c);
  for (std::size_t r = 1; r < features.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) e(r, c) = features(r, d + c);
  return e;
}

PolicyNetwork PolicyNetwork::make(NetworkKind kind, std::uint64_t seed, NetworkShape shape) {
  PolicyNetwork net;
  net.kind_ = kind;
  net.shape_ = std::move(shape);
  Rng rng(seed);

  std::size_t width = 0;
  switch (kind) {
    case NetworkKind::Gcil: {
      std::size_t in = graph::kNodeFeatureDim;
      for (std::size_t out : net.shape_.gcn) {
        net.gcn_.push_back(nn::make_gcn(in, out, rng));
        in = out;
      }
      width = in + graph::kEgoFeatureDim;
      break;
    }
    case NetworkKind::NnCil:
    case NetworkKind::SetCil: {
      std::size_t in = kind == NetworkKind::NnCil ? kNnCilInputDim : graph::kEgoFeatureDim;
      for (std::size_t out : net.shape_.encoder) {
        net.encoder_.push_back(nn::make_dense(in, out, Activation::ReLU, rng));
        in = out;
      }
      width = in;
      break;
    }
  }
  for (std::size_t out : net.shape_.trunk) {
    net.trunk_.push_back(nn::make_dense(width, out, Activation::ReLU, rng));
    width = out;
  }
  for (Command c : kAllCommands) {
    auto& b = net.branches_[index_of(c)];
    b.push_back(nn::make_dense(width, net.shape_.branch_hidden, Activation::ReLU, rng));
    b.push_back(nn::make_dense(net.shape_.branch_hidden, 2, Activation::Tanh, rng));
  }
  return net;
}

std::size_t PolicyNetwork::perception_dim() const {
  return trunk_.empty() ? 0 : trunk_.front().in_dim();
}

PolicyNetwork PolicyNetwork::zeros_like() const {
  PolicyNetwork z = *this;
  z.zero();
  return z;
}

void PolicyNetwork::zero() {
  for (Tensor2* p : parameters()) p->fill(0.0);
}

Tensor2 PolicyNetwork::perceive(const Observation& obs, PerceptionCache* cache) const {
  nn::require_shape(obs.features.cols() == graph::kNodeFeatureDim && obs.features.rows() >= 1,
                    "node features must be Nx12 with N >= 1, got " + obs.features.shape_string());
  Tensor2 features = obs.features;
  for (double& v : features.values()) v *= shape_.input_scale;
  switch (kind_) {
    case NetworkKind::Gcil: {
      nn::require_shape(obs.adjacency.rows() == obs.nodes() && obs.adjacency.cols() == obs.nodes(),
                        "adjacency " + obs.adjacency.shape_string() + " for " +
                            std::to_string(obs.nodes()) + " nodes");
      if (cache) cache->gcn.resize(gcn_.size());
      Tensor2 h = features;
      for (std::size_t l = 0; l < gcn_.size(); ++l)
        h = nn::gcn_forward(obs.adjacency, h, gcn_[l], cache ? &cache->gcn[l] : nullptr);
      Tensor2 p(1, h.cols() + graph::kEgoFeatureDim);
      for (std::size_t c = 0; c < h.cols(); ++c) p(0, c) = h(0, c);
      for (std::size_t c = 0; c < graph::kEgoFeatureDim; ++c) p(0, h.cols() + c) = features(0, c);
      return p;
    }
    case NetworkKind::NnCil: {
      const auto input = nncil_input(features);
      Tensor2 h = Tensor2::from_data(1, kNnCilInputDim, {input.begin(), input.end()});
      if (cache) cache->encoder.resize(encoder_.size());
      for (std::size_t l = 0; l < encoder_.size(); ++l)
        h = nn::dense_forward(encoder_[l], h, cache ? &cache->encoder[l] : nullptr);
      return h;
    }
    case NetworkKind::SetCil: {
      Tensor2 h = set_elements(features);
      if (cache) cache->encoder.resize(encoder_.size());
      for (std::size_t l = 0; l < encoder_.size(); ++l)
        h = nn::dense_forward(encoder_[l], h, cache ? &cache->encoder[l] : nullptr);
      Tensor2 p(1, h.cols());
      std::vector<double> column(h.rows());
      for (std::size_t c = 0; c < h.cols(); ++c) {
        for (std::size_t r = 0; r < h.rows(); ++r) column[r] = h(r, c);
        p(0, c) = nn::canonical_sum(column);
      }
      return p;
    }
  }
  return {};
}

void PolicyNetwork::perceive_backward(const PerceptionCache& cache, const Tensor2& grad_p,
                                      PolicyNetwork& grads) const {
  switch (kind_) {
    case NetworkKind::Gcil: {
      const Tensor2& top = cache.gcn.back().output;
      Tensor2 g(top.rows(), top.cols());
      for (std::size_t c = 0; c < top.cols(); ++c) g(0, c) = grad_p(0, c);
      // The x^ego half of p is an input, not a parameter path.
      for (std::size_t l = gcn_.size(); l-- > 0;)
        g = nn::gcn_backward(gcn_[l], cache.gcn[l], g, grads.gcn_[l]);
      return;
    }
    case NetworkKind::NnCil: {
      Tensor2 g = grad_p;
      for (std::size_t l = encoder_.size(); l-- > 0;)
        g = nn::dense_backward(encoder_[l], cache.encoder[l], g, grads.encoder_[l]);
      return;
    }
    case NetworkKind::SetCil: {
      const Tensor2& top = cache.encoder.back().output;
      Tensor2 g(top.rows(), top.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) = grad_p(0, c);
      for (std::size_t l = encoder_.size(); l-- > 0;)
        g = nn::dense_backward(encoder_[l], cache.encoder[l], g, grads.encoder_[l]);
      return;
    }
  }
}

PolicyNetwork::Forward PolicyNetwork::forward(std::span<const Observation* const> observations,
                                              std::span<const Command> commands) const {
  nn::require_shape(observations.size() == commands.size() && !observations.empty(),
                    "forward needs one command per observation");
  Forward f;
  BatchCache& cache = f.cache;
  cache.generation = generation_;
  cache.owner = this;
  cache.batch = observations.size();
  cache.perception.resize(cache.batch);

  Tensor2 p(cache.batch, perception_dim());
  for (std::size_t i = 0; i < cache.batch; ++i) {
    const Tensor2 pi = perceive(*observations[i], &cache.perception[i]);
    nn::require_shape(pi.cols() == p.cols(), "perception width");
    std::copy(pi.row(0).begin(), pi.row(0).end(), p.row(i).begin());
  }

  cache.trunk.resize(trunk_.size());
  Tensor2 h = std::move(p);
  for (std::size_t l = 0; l < trunk_.size(); ++l) h = nn::dense_forward(trunk_[l], h, &cache.trunk[l]);

  f.actions = Tensor2(cache.batch, 2);
  for (std::size_t i = 0; i < cache.batch; ++i) cache.branch_rows[index_of(commands[i])].push_back(i);
  for (Command c : kAllCommands) {
    const auto& rows = cache.branch_rows[index_of(c)];
    if (rows.empty()) continue;
    Tensor2 x(rows.size(), h.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
      std::copy(h.row(rows[r]).begin(), h.row(rows[r]).end(), x.row(r).begin());
    const auto& branch = branches_[index_of(c)];
    auto& bc = cache.branch[index_of(c)];
    bc.resize(branch.size());
    for (std::size_t l = 0; l < branch.size(); ++l) x = nn::dense_forward(branch[l], x, &bc[l]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      f.actions(rows[r], 0) = x(r, 0);
      f.actions(rows[r], 1) = x(r, 1);
    }
  }
  return f;
}

PolicyNetwork::Forward PolicyNetwork::forward(const Observation& observation, Command command) const {
  const Observation* obs[] = {&observation};
  const Command cmds[] = {command};
  return forward(obs, cmds);
}

Action PolicyNetwork::act(const Observation& observation, Command command) const {
  const auto f = forward(observation, command);
  return {f.actions(0, 0), f.actions(0, 1)};
}

void PolicyNetwork::backward(const BatchCache& cache, const Tensor2& grad_actions,
                             PolicyNetwork& grads) const {
  if (cache.owner != this || cache.generation != generation_)
    throw StaleCacheError("forward cache does not match the current network parameters");
  nn::require_shape(grad_actions.rows() == cache.batch && grad_actions.cols() == 2,
                    "action gradient " + grad_actions.shape_string());
  nn::require_shape(grads.kind_ == kind_ && grads.shape_ == shape_, "gradient network layout");

  const std::size_t width = trunk_.back().out_dim();
  Tensor2 g_trunk(cache.batch, width);
  for (Command c : kAllCommands) {
    const auto& rows = cache.branch_rows[index_of(c)];
    if (rows.empty()) continue;
    Tensor2 g(rows.size(), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      g(r, 0) = grad_actions(rows[r], 0);
      g(r, 1) = grad_actions(rows[r], 1);
    }
    const auto& branch = branches_[index_of(c)];
    auto& gbranch = grads.branches_[index_of(c)];
    for (std::size_t l = branch.size(); l-- > 0;)
      g = nn::dense_backward(branch[l], cache.branch[index_of(c)][l], g, gbranch[l]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      std::copy(g.row(r).begin(), g.row(r).end(), g_trunk.row(rows[r]).begin());
  }

  Tensor2 g = std::move(g_trunk);
  for (std::size_t l = trunk_.size(); l-- > 0;)
    g = nn::dense_backward(trunk_[l], cache.trunk[l], g, grads.trunk_[l]);

  Tensor2 gp(1, g.cols());
  for (std::size_t i = 0; i < cache.batch; ++i) {
    std::copy(g.row(i).begin(), g.row(i).end(), gp.row(0).begin());
    perceive_backward(cache.perception[i], gp, grads);
  }
}

namespace {

template <class Layers, class Out>
void collect_dense(Layers& layers, Out& out) {
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
}

}  // namespace

template <class Self, class Ptr>
std::vector<Ptr> PolicyNetwork::collect(Self& self) {
  std::vector<Ptr> out;
  for (auto& l : self.gcn_) out.push_back(&l.weight);
  collect_dense(self.encoder_, out);
  collect_dense(self.trunk_, out);
  for (auto& b : self.branches_) collect_dense(b, out);
  return out;
}

std::vector<Tensor2*> PolicyNetwork::parameters() {
  ++generation_;
  return collect<PolicyNetwork, Tensor2*>(*this);
}

std::vector<const Tensor2*> PolicyNetwork::parameters() const {
  return collect<const PolicyNetwork, const Tensor2*>(*this);
}

std::vector<std::string> PolicyNetwork::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < gcn_.size(); ++l) names.push_back("gcn." + std::to_string(l) + ".weight");
  auto dense = [&](const std::string& prefix, std::size_t n) {
    for (std::size_t l = 0; l < n; ++l) {
      names.push_back(prefix + "." + std::to_string(l) + ".weight");
      names.push_back(prefix + "." + std::to_string(l) + ".bias");
    }
  };
  dense("encoder", encoder_.size());
  dense("trunk", trunk_.size());
  for (Command c : kAllCommands) dense("branch." + std::string(to_string(c)), branches_[index_of(c)].size());
  return names;
}

std::size_t PolicyNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor2* p : parameters()) n += p->size();
  return n;
}

bool PolicyNetwork::same_weights(const PolicyNetwork& other) const {
  if (kind_ != other.kind_ || !(shape_ == other.shape_)) return false;
  const auto a = parameters();
  const auto b = other.parameters();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i]->same_shape(*b[i])) return false;
    const auto va = a[i]->values();
    const auto vb = b[i]->values();
    if (std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace gcil::policy
