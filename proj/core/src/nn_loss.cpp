#include "gcil/nn/loss.hpp"

namespace gcil::nn {

double sample_loss(double delta, double tau, double delta_star, double tau_star) {
  const double dd = delta - delta_star;
  const double dt = tau - tau_star;
  return dd * dd + dt * dt;
}

LossResult action_loss(const Tensor2& predicted, const Tensor2& target) {
  require_shape(predicted.cols() == 2 && predicted.same_shape(target),
                "action loss " + predicted.shape_string() + " vs " + target.shape_string());
  require_shape(predicted.rows() > 0, "action loss on empty batch");
  LossResult r;
  r.grad = Tensor2(predicted.rows(), 2);
  const double inv = 1.0 / double(predicted.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.rows(); ++i) {
    total += sample_loss(predicted(i, 0), predicted(i, 1), target(i, 0), target(i, 1));
    r.grad(i, 0) = 2.0 * (predicted(i, 0) - target(i, 0)) * inv;
    r.grad(i, 1) = 2.0 * (predicted(i, 1) - target(i, 1)) * inv;
  }
  r.loss = total * inv;
  return r;
}

}  // namespace gcil::nn
