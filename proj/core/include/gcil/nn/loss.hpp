#pragma once

#include "gcil/nn/tensor.hpp"

namespace gcil::nn {

struct LossResult {
  double loss = 0.0;
  Tensor2 grad;  // dL/dprediction, same shape as the predictions
};

/// Mean over rows of (delta - delta*)^2 + (tau - tau*)^2. Predictions and
/// targets are B x 2 with columns (delta, tau).
LossResult action_loss(const Tensor2& predicted, const Tensor2& target);

/// Per-row loss without the batch mean.
double sample_loss(double delta, double tau, double delta_star, double tau_star);

}  // namespace gcil::nn
