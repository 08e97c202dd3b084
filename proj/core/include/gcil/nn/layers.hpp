#pragma once

#include <string_view>

#include "gcil/nn/tensor.hpp"
#include "gcil/rng.hpp"

namespace gcil::nn {

enum class Activation { ReLU, Tanh, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Applies the activation elementwise.
Tensor2 activate(const Tensor2& pre, Activation act);
/// upstream * act'(pre), elementwise. ReLU uses a zero derivative at 0.
Tensor2 activation_backward(const Tensor2& pre, const Tensor2& out, const Tensor2& upstream,
                            Activation act);

/// y = act(x W + b), rows of x are independent samples.
struct DenseLayer {
  Tensor2 weight;  // in x out
  Tensor2 bias;    // 1 x out
  Activation activation = Activation::ReLU;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

struct DenseCache {
  Tensor2 input;
  Tensor2 pre;
  Tensor2 output;
};

/// Seeded initialization. ReLU layers: uniform(+-sqrt(6/fan_in));
/// tanh and identity layers: uniform(+-sqrt(6/(fan_in+fan_out))). Bias zero.
DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng);

Tensor2 dense_forward(const DenseLayer& layer, const Tensor2& x, DenseCache* cache = nullptr);

/// Accumulates dW and db into grad (which must mirror layer's shapes) and
/// returns dL/dx.
Tensor2 dense_backward(const DenseLayer& layer, const DenseCache& cache, const Tensor2& upstream,
                       DenseLayer& grad);

/// H' = ReLU(A H W). No bias.
struct GcnLayer {
  Tensor2 weight;  // in x out

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

struct GcnCache {
  Tensor2 adjacency;
  Tensor2 input;
  Tensor2 aggregated;  // A H
  Tensor2 pre;         // A H W
  Tensor2 output;
};

GcnLayer make_gcn(std::size_t in, std::size_t out, Rng& rng);

Tensor2 gcn_forward(const Tensor2& adjacency, const Tensor2& h, const GcnLayer& layer,
                    GcnCache* cache = nullptr);

/// Accumulates dL/dW into grad and returns dL/dH. The adjacency is constant.
Tensor2 gcn_backward(const GcnLayer& layer, const GcnCache& cache, const Tensor2& upstream,
                     GcnLayer& grad);

}  // namespace gcil::nn
