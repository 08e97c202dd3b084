#include <algorithm>
#include <cmath>

#include "gcil/nn/gradcheck.hpp"

namespace gcil::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult finite_diff_check(std::span<Tensor2* const> params,
                                  std::span<const Tensor2* const> analytic,
                                  const std::function<double()>& loss,
                                  const GradCheckOptions& options) {
  require_shape(params.size() == analytic.size(), "gradcheck parameter/gradient count");
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3))
    throw std::invalid_argument("gradcheck eps must lie in [1e-7, 1e-3]");

  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t t = 0; t < params.size(); ++t) {
    require_shape(params[t]->same_shape(*analytic[t]), "gradcheck tensor " + std::to_string(t));
    for (std::size_t k = 0; k < params[t]->size(); ++k) entries.emplace_back(t, k);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  const std::uint64_t base_sig = options.gate_signature ? options.gate_signature() : 0;
  const std::size_t max_draws = options.samples * 20;
  for (std::size_t draw = 0; draw < max_draws && result.checked < options.samples; ++draw) {
    const auto [t, k] = entries[rng.index(entries.size())];
    double& p = params[t]->values()[k];
    const double saved = p;

    p = saved + options.eps;
    const bool plus_ok = !options.gate_signature || options.gate_signature() == base_sig;
    const double up = loss();
    p = saved - options.eps;
    const bool minus_ok = !options.gate_signature || options.gate_signature() == base_sig;
    const double down = loss();
    p = saved;

    if (!plus_ok || !minus_ok) {
      ++result.skipped_near_kink;
      continue;
    }
    const double numeric = (up - down) / (2.0 * options.eps);
    result.max_relative_error =
        std::max(result.max_relative_error, relative_error(analytic[t]->values()[k], numeric, options.floor));
    ++result.checked;
  }
  return result;
}

}  // namespace gcil::nn
