#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "gcil/nn/loss.hpp"
#include "gcil/policy/gradcheck.hpp"
#include "gcil/policy/network.hpp"
#include "gcil/sim/world.hpp"
#include "support.hpp"

using namespace gcil;
using namespace gcil::policy;
using gcil::testing::vehicle;

namespace {

constexpr NetworkKind kKinds[] = {NetworkKind::Gcil, NetworkKind::NnCil, NetworkKind::SetCil};

Observation spawned_observation(std::uint64_t seed, int density = 5,
                                Command c = Command::Forward) {
  sim::ScenarioConfig sc;
  sc.traffic.density = density;
  const auto s = sim::spawn_scenario(sc, c, seed);
  return observe(s.world, s.goal, graph::GraphConfig{});
}

// Relabels surrounding nodes: new node i is old node perm[i]; perm[0] = 0.
Observation permuted(const Observation& o, const std::vector<std::size_t>& perm) {
  Observation p{nn::Tensor2(o.features.rows(), o.features.cols()),
                nn::Tensor2(o.adjacency.rows(), o.adjacency.cols())};
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < o.features.cols(); ++c) p.features(i, c) = o.features(perm[i], c);
    for (std::size_t j = 0; j < perm.size(); ++j) p.adjacency(i, j) = o.adjacency(perm[i], perm[j]);
  }
  return p;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 1; --i) std::swap(perm[i], perm[1 + rng.index(i)]);
  return perm;
}

}  // namespace

TEST(Policy, GcilPerceptionHasSixteenEntries) {
  const auto net = PolicyNetwork::make(NetworkKind::Gcil, 1);
  EXPECT_EQ(net.perception_dim(), 16u);
  const auto obs = spawned_observation(3);
  const auto p = net.perceive(obs);
  EXPECT_EQ(p.rows(), 1u);
  EXPECT_EQ(p.cols(), 16u);
  // The tail of p is x^ego at the network's input scale.
  for (std::size_t c = 0; c < 6; ++c)
    EXPECT_EQ(p(0, 10 + c), obs.features(0, c) * net.shape().input_scale);
}

TEST(Policy, LayerShapes) {
  const auto g = PolicyNetwork::make(NetworkKind::Gcil, 1);
  ASSERT_EQ(g.gcn_layers().size(), 3u);
  EXPECT_EQ(g.gcn_layers()[0].in_dim(), 12u);
  ASSERT_EQ(g.trunk_layers().size(), 4u);
  const std::size_t widths[] = {128, 256, 64, 64};
  for (std::size_t l = 0; l < 4; ++l) EXPECT_EQ(g.trunk_layers()[l].out_dim(), widths[l]);
  for (Command c : kAllCommands) {
    const auto& b = g.branch_layers(c);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[0].out_dim(), 64u);
    EXPECT_EQ(b[0].activation, nn::Activation::ReLU);
    EXPECT_EQ(b[1].out_dim(), 2u);
    EXPECT_EQ(b[1].activation, nn::Activation::Tanh);
  }
  const auto nn = PolicyNetwork::make(NetworkKind::NnCil, 1);
  EXPECT_EQ(nn.encoder_layers()[0].in_dim(), 24u);
  EXPECT_EQ(nn.perception_dim(), 64u);
  const auto set = PolicyNetwork::make(NetworkKind::SetCil, 1);
  EXPECT_EQ(set.encoder_layers()[0].in_dim(), 6u);
  // Baselines share the head layout with G-CIL.
  EXPECT_EQ(set.trunk_layers().size(), g.trunk_layers().size());
}

TEST(Policy, ActionsStayInBox) {
  Rng rng(2);
  for (NetworkKind k : kKinds) {
    const auto net = PolicyNetwork::make(k, 5);
    for (int t = 0; t < 30; ++t) {
      auto obs = spawned_observation(t, 3 + 2 * (t % 3));
      for (double& v : obs.features.values()) v *= rng.uniform(0.1, 50.0);
      const auto a = net.act(obs, kAllCommands[t % 3]);
      ASSERT_GE(a.delta, -1.0);
      ASSERT_LE(a.delta, 1.0);
      ASSERT_GE(a.tau, -1.0);
      ASSERT_LE(a.tau, 1.0);
    }
  }
}

TEST(Policy, ForwardIsDeterministic) {
  for (NetworkKind k : kKinds) {
    const auto a = PolicyNetwork::make(k, 9), b = PolicyNetwork::make(k, 9);
    EXPECT_TRUE(a.same_weights(b));
    const auto obs = spawned_observation(4);
    EXPECT_EQ(a.act(obs, Command::TurnLeft), b.act(obs, Command::TurnLeft));
  }
}

TEST(Policy, AnyNodeCountWithoutRebuilding) {
  const auto net = PolicyNetwork::make(NetworkKind::Gcil, 3);
  auto w = gcil::testing::bare_world();
  const sim::GoalSpec goal{{0, 30}, 2.0};
  for (int n = 0; n < 12; ++n) {
    const auto a = net.act(observe(w, goal, {}), Command::Forward);
    EXPECT_TRUE(std::isfinite(a.delta) && std::isfinite(a.tau));
    w.surrounding.push_back(vehicle(3.0 * n, 10, 0, 2, n + 1));
  }
}

TEST(Policy, RejectsMalformedObservation) {
  const auto net = PolicyNetwork::make(NetworkKind::Gcil, 3);
  Observation bad{nn::Tensor2(3, 12), nn::Tensor2(2, 2)};
  EXPECT_THROW(net.act(bad, Command::Forward), nn::ShapeError);
  Observation narrow{nn::Tensor2(3, 11), nn::Tensor2(3, 3)};
  EXPECT_THROW(net.act(narrow, Command::Forward), nn::ShapeError);
}

TEST(Policy, NonSelectedBranchDoesNotAffectOutput) {
  for (NetworkKind k : kKinds) {
    auto net = PolicyNetwork::make(k, 11);
    const auto obs = spawned_observation(6);
    const Action before = net.act(obs, Command::Forward);
    for (Command other : {Command::TurnLeft, Command::TurnRight})
      for (auto& layer : net.branch_layers(other)) {
        for (double& v : layer.weight.values()) v += 0.37;
        for (double& v : layer.bias.values()) v -= 1.5;
      }
    EXPECT_EQ(net.act(obs, Command::Forward), before);
  }
}

TEST(Policy, NonSelectedBranchGradientsAreExactlyZero) {
  for (NetworkKind k : kKinds) {
    const auto net = PolicyNetwork::make(k, 12);
    // Raw-unit features saturate an untrained tanh head; shrink them so the
    // selected branch sees a nonzero gradient.
    auto obs = spawned_observation(7);
    for (double& v : obs.features.values()) v *= 0.02;
    auto fwd = net.forward(obs, Command::TurnRight);
    auto grads = net.zeros_like();
    net.backward(fwd.cache, nn::Tensor2{{0.3, -0.8}}, grads);
    for (Command c : {Command::Forward, Command::TurnLeft})
      for (const auto& layer : grads.branch_layers(c)) {
        for (double v : layer.weight.values()) ASSERT_EQ(v, 0.0);
        for (double v : layer.bias.values()) ASSERT_EQ(v, 0.0);
      }
    double mass = 0.0;
    for (const auto& layer : grads.branch_layers(Command::TurnRight))
      for (double v : layer.weight.values()) mass += std::abs(v);
    EXPECT_GT(mass, 0.0);
  }
}

TEST(Policy, ZeroUpstreamGivesZeroGradients) {
  for (NetworkKind k : kKinds) {
    const auto net = PolicyNetwork::make(k, 13);
    const auto obs = spawned_observation(8);
    auto fwd = net.forward(obs, Command::Forward);
    auto grads = net.zeros_like();
    net.backward(fwd.cache, nn::Tensor2(1, 2), grads);
    for (const auto* p : std::as_const(grads).parameters())
      for (double v : p->values()) ASSERT_EQ(v, 0.0);
  }
}

TEST(Policy, StaleCacheIsRejected) {
  auto net = PolicyNetwork::make(NetworkKind::Gcil, 14);
  const auto obs = spawned_observation(9);
  auto fwd = net.forward(obs, Command::Forward);
  net.parameters()[0]->values()[0] += 1e-3;
  auto grads = net.zeros_like();
  EXPECT_THROW(net.backward(fwd.cache, nn::Tensor2{{1, 1}}, grads), StaleCacheError);
  const auto other = PolicyNetwork::make(NetworkKind::Gcil, 14);
  EXPECT_THROW(other.backward(fwd.cache, nn::Tensor2{{1, 1}}, grads), StaleCacheError);
}

TEST(Policy, GcilEquivariantToRelabeling) {
  Rng rng(15);
  const auto net = PolicyNetwork::make(NetworkKind::Gcil, 15);
  for (int t = 0; t < 40; ++t) {
    const auto obs = spawned_observation(100 + t, 7, kAllCommands[t % 3]);
    const auto perm = shuffled(obs.nodes(), rng);
    const auto p = permuted(obs, perm);
    for (Command c : kAllCommands) ASSERT_EQ(net.act(obs, c), net.act(p, c));
  }
}

TEST(Policy, GcilRelabelingWithRebuiltAdjacency) {
  sim::ScenarioConfig sc;
  sc.traffic.density = 7;
  const auto s = sim::spawn_scenario(sc, Command::TurnLeft, 41);
  auto w = s.world;
  std::reverse(w.surrounding.begin(), w.surrounding.end());
  const auto net = PolicyNetwork::make(NetworkKind::Gcil, 2);
  for (auto strat : graph::kAllStrategies) {
    graph::GraphConfig cfg;
    cfg.strategy = strat;
    EXPECT_EQ(net.act(observe(s.world, s.goal, cfg), Command::TurnLeft),
              net.act(observe(w, s.goal, cfg), Command::TurnLeft))
        << graph::to_string(strat);
  }
}

TEST(Policy, SetCilInvariantToPermutation) {
  Rng rng(16);
  const auto net = PolicyNetwork::make(NetworkKind::SetCil, 16);
  for (int t = 0; t < 40; ++t) {
    const auto obs = spawned_observation(200 + t, 7);
    const auto p = permuted(obs, shuffled(obs.nodes(), rng));
    ASSERT_EQ(net.act(obs, Command::Forward), net.act(p, Command::Forward));
    ASSERT_EQ(net.perceive(obs), net.perceive(p));
  }
}

TEST(Policy, SetCilEncodingIsElementSum) {
  const auto net = PolicyNetwork::make(NetworkKind::SetCil, 17);
  auto encode_one = [&](std::span<const double> e) {
    nn::Tensor2 h = nn::Tensor2::from_data(1, 6, {e.begin(), e.end()});
    for (double& v : h.values()) v *= net.shape().input_scale;
    for (const auto& l : net.encoder_layers()) h = nn::dense_forward(l, h);
    return h;
  };
  auto w = gcil::testing::bare_world();
  const sim::GoalSpec goal{{0, 30}, 2.0};
  // Ego only: p is the encoding of x^ego.
  const auto lone = observe(w, goal, {});
  const auto single = encode_one(set_elements(lone.features).row(0));
  EXPECT_EQ(net.perceive(lone), single);

  // A duplicated vehicle contributes its encoding twice.
  w.surrounding.push_back(vehicle(4, -3, 0.5, 3, 1));
  const auto one = observe(w, goal, {});
  w.surrounding.push_back(vehicle(4, -3, 0.5, 3, 2));
  const auto two = observe(w, goal, {});
  const auto elem = encode_one(set_elements(one.features).row(1));
  const auto p1 = net.perceive(one), p2 = net.perceive(two);
  for (std::size_t c = 0; c < p1.cols(); ++c) {
    EXPECT_NEAR(p1(0, c), single(0, c) + elem(0, c), 1e-12);
    EXPECT_NEAR(p2(0, c), single(0, c) + 2.0 * elem(0, c), 1e-12);
  }
}

TEST(NnCilInput, NoNeighborsPadsWithZeros) {
  auto w = gcil::testing::bare_world();
  const auto x = nncil_input(w, {{0, 30}, 2.0}, 6.0);
  for (std::size_t i = 6; i < 24; ++i) EXPECT_EQ(x[i], 0.0);
  EXPECT_GT(x[0], 0.0);
}

TEST(NnCilInput, NearestThreeInOrder) {
  auto w = gcil::testing::bare_world();
  w.ego = vehicle(0, 0, 0, 0, 0);
  const double d[] = {15, 3, 20, 9, 7};
  for (int i = 0; i < 5; ++i) w.surrounding.push_back(vehicle(d[i], 0, 0, 0, i + 1));
  const auto x = nncil_input(w, {{0, 30}, 2.0}, 6.0);
  EXPECT_EQ(x[6], 3.0);
  EXPECT_EQ(x[12], 7.0);
  EXPECT_EQ(x[18], 9.0);
}

TEST(NnCilInput, TiesGoToLowerIdInEveryOrdering) {
  // Four vehicles at distance 5 with distinct bearings; every listing order
  // must yield the slots of ids 1, 2, 3.
  std::vector<sim::VehicleState> vs{vehicle(5, 0, 0, 1, 1), vehicle(0, 5, 0, 2, 2),
                                    vehicle(-5, 0, 0, 3, 3), vehicle(0, -5, 0, 4, 4)};
  std::vector<int> order{0, 1, 2, 3};
  std::optional<std::array<double, 24>> first;
  do {
    auto w = gcil::testing::bare_world();
    w.ego = vehicle(0, 0, 0, 0, 0);
    for (int i : order) w.surrounding.push_back(vs[i]);
    const auto x = nncil_input(w, {{0, 30}, 2.0}, 6.0);
    if (!first) first = x;
    ASSERT_EQ(x, *first);
  } while (std::next_permutation(order.begin(), order.end()));
  EXPECT_EQ((*first)[7], 5.0);   // id 1 at (5, 0)
  EXPECT_EQ((*first)[14], 5.0);  // id 2 at (0, 5)
  EXPECT_EQ((*first)[19], -5.0); // id 3 at (-5, 0)
}

TEST(Policy, ParameterNamesAreStableAndUnique) {
  for (NetworkKind k : kKinds) {
    const auto net = PolicyNetwork::make(k, 1);
    auto names = net.parameter_names();
    EXPECT_EQ(names.size(), std::as_const(net).parameters().size());
    std::sort(names.begin(), names.end());
    EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
    std::size_t count = 0;
    for (const auto* p : std::as_const(net).parameters()) count += p->size();
    EXPECT_EQ(count, net.parameter_count());
  }
}

TEST(Policy, KindNamesRoundTrip) {
  for (NetworkKind k : kKinds) EXPECT_EQ(parse_network_kind(to_string(k)), k);
  EXPECT_FALSE(parse_network_kind("cnn").has_value());
}

TEST(PolicyGradCheck, EndToEndAllKinds) {
  for (NetworkKind k : kKinds) {
    auto net = PolicyNetwork::make(k, 21);
    const auto problem = make_gradcheck_problem(21, 6);
    auto opt = default_gradcheck_options();
    opt.samples = 200;
    const auto r = check_gradients(net, problem, opt);
    EXPECT_EQ(r.checked, 200u) << to_string(k);
    EXPECT_LT(r.max_relative_error, 1e-4) << to_string(k);
  }
}

TEST(PolicyGradCheck, BatchGradientsAreBranchMasked) {
  const auto net = PolicyNetwork::make(NetworkKind::Gcil, 22);
  auto problem = make_gradcheck_problem(22, 3);
  for (auto& c : problem.commands) c = Command::TurnLeft;
  const auto g = batch_gradients(net, problem);
  for (Command c : {Command::Forward, Command::TurnRight})
    for (const auto& l : g.branch_layers(c))
      for (double v : l.weight.values()) ASSERT_EQ(v, 0.0);
}
