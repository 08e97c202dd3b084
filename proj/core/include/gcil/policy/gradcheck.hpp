#pragma once

#include <cstdint>
#include <vector>

#include "gcil/nn/gradcheck.hpp"
#include "gcil/policy/network.hpp"

namespace gcil::policy {

/// A small batch of simulator observations with random action targets.
struct GradCheckProblem {
  std::vector<Observation> observations;
  std::vector<Command> commands;
  nn::Tensor2 targets;  // B x 2

  std::vector<const Observation*> pointers() const;
};

/// Observations from seeded scenarios at a few time steps, cycling through
/// the commands so every branch is exercised.
GradCheckProblem make_gradcheck_problem(std::uint64_t seed, std::size_t batch,
                                        const graph::GraphConfig& graph = {});

/// Hash of every ReLU gate (sign of each pre-activation) for a batch.
std::uint64_t relu_gate_signature(const PolicyNetwork& net, const GradCheckProblem& problem);

/// Mean action loss of the batch under the current weights.
double batch_loss(const PolicyNetwork& net, const GradCheckProblem& problem);

/// Analytic parameter gradients of batch_loss.
PolicyNetwork batch_gradients(const PolicyNetwork& net, const GradCheckProblem& problem);

/// eps 1e-4 and a 1e-6 denominator floor: raw-unit inputs saturate some
/// tanh outputs, leaving gradients near 1e-10 that only round-off separates.
nn::GradCheckOptions default_gradcheck_options();

/// Central differences against backprop on sampled entries, skipping
/// entries whose perturbation flips a ReLU gate.
nn::GradCheckResult check_gradients(PolicyNetwork& net, const GradCheckProblem& problem,
                                    nn::GradCheckOptions options = default_gradcheck_options());

}  // namespace gcil::policy
