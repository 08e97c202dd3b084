#include <cmath>

#include "gcil/nn/layers.hpp"

namespace gcil::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::ReLU, Activation::Tanh, Activation::Identity})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Tensor2 activate(const Tensor2& pre, Activation act) {
  Tensor2 out = pre;
  auto v = out.values();
  switch (act) {
    case Activation::ReLU:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::Tanh:
      for (double& x : v) x = std::tanh(x);
      break;
    case Activation::Identity: break;
  }
  return out;
}

Tensor2 activation_backward(const Tensor2& pre, const Tensor2& out, const Tensor2& upstream,
                            Activation act) {
  require_shape(pre.same_shape(upstream), "activation upstream " + upstream.shape_string() +
                                              " vs " + pre.shape_string());
  Tensor2 g = upstream;
  auto gv = g.values();
  const auto pv = pre.values();
  const auto ov = out.values();
  switch (act) {
    case Activation::ReLU:
      for (std::size_t i = 0; i < gv.size(); ++i)
        if (!(pv[i] > 0.0)) gv[i] = 0.0;
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= 1.0 - ov[i] * ov[i];
      break;
    case Activation::Identity: break;
  }
  return g;
}

namespace {

Tensor2 uniform_matrix(std::size_t rows, std::size_t cols, double limit, Rng& rng) {
  Tensor2 w(rows, cols);
  for (double& x : w.values()) x = rng.uniform(-limit, limit);
  return w;
}

}  // namespace

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  const double limit = act == Activation::ReLU ? std::sqrt(6.0 / double(in))
                                               : std::sqrt(6.0 / double(in + out));
  return {uniform_matrix(in, out, limit, rng), Tensor2(1, out), act};
}

Tensor2 dense_forward(const DenseLayer& layer, const Tensor2& x, DenseCache* cache) {
  require_shape(x.cols() == layer.in_dim(),
                "dense input " + x.shape_string() + " vs weight " + layer.weight.shape_string());
  require_shape(layer.bias.rows() == 1 && layer.bias.cols() == layer.out_dim(), "dense bias");
  Tensor2 pre = matmul(x, layer.weight);
  for (std::size_t r = 0; r < pre.rows(); ++r) {
    auto row = pre.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias(0, c);
  }
  Tensor2 out = activate(pre, layer.activation);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->output = out;
  }
  return out;
}

Tensor2 dense_backward(const DenseLayer& layer, const DenseCache& cache, const Tensor2& upstream,
                       DenseLayer& grad) {
  require_shape(upstream.same_shape(cache.output),
                "dense upstream " + upstream.shape_string() + " vs " + cache.output.shape_string());
  require_shape(grad.weight.same_shape(layer.weight) && grad.bias.same_shape(layer.bias),
                "dense gradient buffers");
  const Tensor2 g = activation_backward(cache.pre, cache.output, upstream, layer.activation);
  grad.weight += matmul_tn(cache.input, g);
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) grad.bias(0, c) += g(r, c);
  return matmul_nt(g, layer.weight);
}

GcnLayer make_gcn(std::size_t in, std::size_t out, Rng& rng) {
  return {uniform_matrix(in, out, std::sqrt(6.0 / double(in)), rng)};
}

Tensor2 gcn_forward(const Tensor2& adjacency, const Tensor2& h, const GcnLayer& layer,
                    GcnCache* cache) {
  require_shape(adjacency.rows() == adjacency.cols(),
                "adjacency must be square, got " + adjacency.shape_string());
  require_shape(adjacency.cols() == h.rows(),
                "adjacency " + adjacency.shape_string() + " vs features " + h.shape_string());
  require_shape(h.cols() == layer.in_dim(),
                "gcn input " + h.shape_string() + " vs weight " + layer.weight.shape_string());
  Tensor2 aggregated = matmul_canonical(adjacency, h);
  Tensor2 pre = matmul(aggregated, layer.weight);
  Tensor2 out = activate(pre, Activation::ReLU);
  if (cache) {
    cache->adjacency = adjacency;
    cache->input = h;
    cache->aggregated = std::move(aggregated);
    cache->pre = std::move(pre);
    cache->output = out;
  }
  return out;
}

Tensor2 gcn_backward(const GcnLayer& layer, const GcnCache& cache, const Tensor2& upstream,
                     GcnLayer& grad) {
  require_shape(upstream.same_shape(cache.output),
                "gcn upstream " + upstream.shape_string() + " vs " + cache.output.shape_string());
  require_shape(grad.weight.same_shape(layer.weight), "gcn gradient buffer");
  const Tensor2 g = activation_backward(cache.pre, cache.output, upstream, Activation::ReLU);
  grad.weight += matmul_tn(cache.aggregated, g);
  return matmul_tn(cache.adjacency, matmul_nt(g, layer.weight));
}

}  // namespace gcil::nn
