#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "gcil/nn/tensor.hpp"
#include "gcil/rng.hpp"

namespace gcil::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_near_kink = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t samples = 200;
  /// Fingerprint of every ReLU gate for the current parameter values. An
  /// entry whose +-eps perturbation changes the fingerprint sits too close to
  /// a kink and is skipped in favor of another draw. Optional.
  std::function<std::uint64_t()> gate_signature;
  std::uint64_t seed = 7;
  /// Lower bound on the relative-error denominator. Central differences carry
  /// round-off of roughly machine epsilon * |loss| / eps, so gradients below
  /// this size are compared in absolute terms.
  double floor = 1e-8;
};

/// Central-difference check of analytic gradients on a random subsample of
/// parameter entries. `loss` re-evaluates the scalar objective with the
/// current parameter values. Returns the maximum of
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult finite_diff_check(std::span<Tensor2* const> params,
                                  std::span<const Tensor2* const> analytic,
                                  const std::function<double()>& loss,
                                  const GradCheckOptions& options);

/// Relative error metric used by finite_diff_check.
double relative_error(double analytic, double numeric, double floor = 1e-8);

}  // namespace gcil::nn
