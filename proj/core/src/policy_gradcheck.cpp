#include <cstring>

#include "gcil/nn/loss.hpp"
#include "gcil/policy/gradcheck.hpp"
#include "gcil/sim/world.hpp"

namespace gcil::policy {

std::vector<const Observation*> GradCheckProblem::pointers() const {
  std::vector<const Observation*> p;
  for (const auto& o : observations) p.push_back(&o);
  return p;
}

GradCheckProblem make_gradcheck_problem(std::uint64_t seed, std::size_t batch,
                                        const graph::GraphConfig& graph) {
  GradCheckProblem p;
  p.targets = nn::Tensor2(batch, 2);
  Rng rng(derive_seed(seed, 0));
  const int densities[] = {3, 5, 7};
  for (std::size_t i = 0; i < batch; ++i) {
    const Command c = kAllCommands[i % kNumCommands];
    sim::ScenarioConfig sc;
    sc.traffic.density = densities[i % 3];
    const auto scenario = sim::spawn_scenario(sc, c, derive_seed(seed, i + 1));
    sim::WorldState w = scenario.world;
    // A few coasting steps so speeds and headings differ from the spawn.
    const std::size_t steps = rng.index(20);
    for (std::size_t s = 0; s < steps; ++s) sim::advance(w, {rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.4)});
    p.observations.push_back(observe(w, scenario.goal, graph));
    p.commands.push_back(c);
    p.targets(i, 0) = rng.uniform(-1.0, 1.0);
    p.targets(i, 1) = rng.uniform(-1.0, 1.0);
  }
  return p;
}

namespace {

void mix(std::uint64_t& h, const nn::Tensor2& pre) {
  for (double v : pre.values()) {
    h ^= v > 0.0 ? 0x9E3779B97F4A7C15ULL : 0x2545F4914F6CDD1DULL;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::uint64_t relu_gate_signature(const PolicyNetwork& net, const GradCheckProblem& problem) {
  const auto obs = problem.pointers();
  const auto fwd = net.forward(obs, problem.commands);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& pc : fwd.cache.perception) {
    for (const auto& g : pc.gcn) mix(h, g.pre);
    for (std::size_t l = 0; l < pc.encoder.size(); ++l) mix(h, pc.encoder[l].pre);
  }
  for (std::size_t l = 0; l < fwd.cache.trunk.size(); ++l)
    if (net.trunk_layers()[l].activation == nn::Activation::ReLU) mix(h, fwd.cache.trunk[l].pre);
  for (Command c : kAllCommands) {
    const auto& layers = net.branch_layers(c);
    const auto& caches = fwd.cache.branch[index_of(c)];
    for (std::size_t l = 0; l < caches.size(); ++l)
      if (layers[l].activation == nn::Activation::ReLU) mix(h, caches[l].pre);
  }
  return h;
}

double batch_loss(const PolicyNetwork& net, const GradCheckProblem& problem) {
  const auto obs = problem.pointers();
  return nn::action_loss(net.forward(obs, problem.commands).actions, problem.targets).loss;
}

PolicyNetwork batch_gradients(const PolicyNetwork& net, const GradCheckProblem& problem) {
  const auto obs = problem.pointers();
  auto fwd = net.forward(obs, problem.commands);
  const auto loss = nn::action_loss(fwd.actions, problem.targets);
  PolicyNetwork grads = net.zeros_like();
  net.backward(fwd.cache, loss.grad, grads);
  return grads;
}

nn::GradCheckOptions default_gradcheck_options() {
  nn::GradCheckOptions o;
  o.eps = 1e-4;
  o.floor = 1e-6;
  return o;
}

nn::GradCheckResult check_gradients(PolicyNetwork& net, const GradCheckProblem& problem,
                                    nn::GradCheckOptions options) {
  const PolicyNetwork grads = batch_gradients(net, problem);
  const auto analytic = grads.parameters();
  const auto params = net.parameters();
  if (!options.gate_signature)
    options.gate_signature = [&] { return relu_gate_signature(net, problem); };
  return nn::finite_diff_check(params, analytic, [&] { return batch_loss(net, problem); }, options);
}

}  // namespace gcil::policy
