#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcil/nn/tensor.hpp"

namespace gcil::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are stored per parameter tensor, in the
/// order the parameters are presented to step().
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }
  const std::vector<Tensor2>& first_moments() const { return m_; }
  const std::vector<Tensor2>& second_moments() const { return v_; }

  /// Applies one update. params and grads must be aligned and shape-matched;
  /// the first call sizes the moment buffers.
  void step(std::span<Tensor2* const> params, std::span<const Tensor2* const> grads);

  /// Restores saved state (checkpoint resume).
  void restore(std::uint64_t t, std::vector<Tensor2> m, std::vector<Tensor2> v);

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Tensor2> m_;
  std::vector<Tensor2> v_;
};

}  // namespace gcil::nn
