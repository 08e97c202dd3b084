#include <benchmark/benchmark.h>

#include "gcil/graph/encoder.hpp"
#include "gcil/nn/layers.hpp"
#include "gcil/nn/loss.hpp"
#include "gcil/policy/network.hpp"
#include "gcil/sim/world.hpp"

using namespace gcil;

namespace {

sim::Scenario scenario(int density) {
  sim::ScenarioConfig cfg;
  cfg.traffic.density = density;
  return sim::spawn_scenario(cfg, Command::Forward, 11);
}

std::vector<Vec2> random_positions(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec2> p(n);
  for (auto& v : p) v = {rng.uniform(-30, 30), rng.uniform(-30, 30)};
  return p;
}

}  // namespace

static void BM_BuildAdjacency(benchmark::State& state) {
  const auto pos = random_positions(static_cast<std::size_t>(state.range(0)), 3);
  const graph::GraphConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(graph::build_adjacency(pos, cfg));
}
BENCHMARK(BM_BuildAdjacency)->Arg(4)->Arg(6)->Arg(8)->Arg(32);

static void BM_GcnForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  const auto layer = nn::make_gcn(graph::kNodeFeatureDim, 32, rng);
  const auto adj = graph::build_adjacency(random_positions(n, 7), {});
  nn::Tensor2 h(n, graph::kNodeFeatureDim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < graph::kNodeFeatureDim; ++j) h(i, j) = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(nn::gcn_forward(adj, h, layer));
}
BENCHMARK(BM_GcnForward)->Arg(4)->Arg(8);

static void BM_PolicyAct(benchmark::State& state) {
  const auto kind = static_cast<policy::NetworkKind>(state.range(0));
  const auto net = policy::PolicyNetwork::make(kind, 1);
  const auto s = scenario(7);
  const auto obs = policy::observe(s.world, s.goal, {});
  for (auto _ : state) benchmark::DoNotOptimize(net.act(obs, Command::Forward));
}
BENCHMARK(BM_PolicyAct)->DenseRange(0, 2);

// One forward/backward pass over a 64-row batch, the core of a training step.
static void BM_PolicyTrainStep(benchmark::State& state) {
  const auto kind = static_cast<policy::NetworkKind>(state.range(0));
  const auto net = policy::PolicyNetwork::make(kind, 1);
  auto grads = net.zeros_like();
  const auto s = scenario(5);
  const auto obs = policy::observe(s.world, s.goal, {});
  std::vector<const policy::Observation*> batch(64, &obs);
  std::vector<Command> cmds;
  for (std::size_t i = 0; i < batch.size(); ++i) cmds.push_back(kAllCommands[i % 3]);
  nn::Tensor2 target(batch.size(), 2);
  for (auto _ : state) {
    grads.zero();
    const auto fwd = net.forward(batch, cmds);
    const auto loss = nn::action_loss(fwd.actions, target);
    net.backward(fwd.cache, loss.grad, grads);
    benchmark::DoNotOptimize(loss.loss);
  }
}
BENCHMARK(BM_PolicyTrainStep)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

static void BM_WorldAdvance(benchmark::State& state) {
  const auto s = scenario(static_cast<int>(state.range(0)));
  auto world = s.world;
  for (auto _ : state) {
    world = s.world;
    for (int i = 0; i < 10; ++i) advance(world, {0.0, 0.3});
    benchmark::DoNotOptimize(world.time);
  }
}
BENCHMARK(BM_WorldAdvance)->Arg(3)->Arg(7);
BENCHMARK_MAIN();
