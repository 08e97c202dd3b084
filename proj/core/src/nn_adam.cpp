#include <cmath>

#include "gcil/nn/adam.hpp"

namespace gcil::nn {

void Adam::step(std::span<Tensor2* const> params, std::span<const Tensor2* const> grads) {
  require_shape(params.size() == grads.size(), "adam parameter/gradient count");
  if (m_.empty()) {
    for (const Tensor2* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  require_shape(m_.size() == params.size(), "adam state does not match parameter list");

  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, double(t_));
  const double c2 = 1.0 - std::pow(b2, double(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    const auto g = grads[i]->values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    require_shape(p.size() == g.size() && p.size() == m.size(),
                  "adam tensor " + std::to_string(i) + " shape");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

void Adam::restore(std::uint64_t t, std::vector<Tensor2> m, std::vector<Tensor2> v) {
  require_shape(m.size() == v.size(), "adam moment lists differ in length");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace gcil::nn
