#include <gtest/gtest.h>

#include <cmath>

#include "gcil/nn/adam.hpp"
#include "gcil/nn/gradcheck.hpp"
#include "gcil/nn/layers.hpp"
#include "gcil/nn/loss.hpp"

using namespace gcil;
using namespace gcil::nn;

namespace {

Tensor2 random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor2 t(r, c);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

double weighted_sum(const Tensor2& y, const Tensor2& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * w.values()[i];
  return s;
}

std::uint64_t sign_hash(const Tensor2& pre) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : pre.values()) h = (h ^ (v > 0.0 ? 1u : 2u)) * 1099511628211ULL;
  return h;
}

Tensor2 row_stochastic(std::size_t n, Rng& rng) {
  Tensor2 a = random_tensor(n, n, rng, 0.1, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : a.row(i)) s += v;
    for (double& v : a.row(i)) v /= s;
  }
  return a;
}

}  // namespace

TEST(Tensor, MatmulAgainstNaiveLoops) {
  Rng rng(1);
  const auto a = random_tensor(4, 5, rng), b = random_tensor(5, 3, rng);
  const auto c = matmul(a, b);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(c(i, j), s, 1e-14);
    }
  EXPECT_EQ(matmul_tn(a, a), matmul(transpose(a), a));
  EXPECT_EQ(matmul_nt(b, b), matmul(b, transpose(b)));
}

TEST(Tensor, ShapeMismatchRejected) {
  EXPECT_THROW(matmul(Tensor2(2, 3), Tensor2(2, 3)), ShapeError);
  Tensor2 a(2, 2);
  EXPECT_THROW(a += Tensor2(3, 2), ShapeError);
  EXPECT_THROW(action_loss(Tensor2(2, 2), Tensor2(3, 2)), ShapeError);
  GcnLayer g{Tensor2(4, 3)};
  EXPECT_THROW(gcn_forward(Tensor2::identity(2), Tensor2(3, 4), g), ShapeError);
}

TEST(Tensor, CanonicalProductIgnoresInnerOrder) {
  Rng rng(2);
  const auto a = random_tensor(3, 6, rng, -1e3, 1e3), b = random_tensor(6, 2, rng, -1e-3, 1e3);
  // Reverse the inner index of both factors.
  Tensor2 ar(3, 6), br(6, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 6; ++k) ar(i, k) = a(i, 5 - k);
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t j = 0; j < 2; ++j) br(k, j) = b(5 - k, j);
  EXPECT_EQ(matmul_canonical(a, b), matmul_canonical(ar, br));
  std::vector<double> x{1e16, 1.0, -1e16, 3.0}, y{3.0, -1e16, 1.0, 1e16};
  EXPECT_EQ(canonical_sum(x), canonical_sum(y));
}

TEST(Gcn, IdentityCompositionPassesThrough) {
  const Tensor2 h{{1, 2, 0}, {0.5, 0, 3}, {4, 1, 1}};
  GcnLayer layer{Tensor2::identity(3)};
  EXPECT_EQ(gcn_forward(Tensor2::identity(3), h, layer), h);
}

TEST(Gcn, TwoNodeWorkedExample) {
  const Tensor2 a{{0.6, 0.4}, {0.5, 0.5}};
  const Tensor2 h{{1, -1}, {2, 0}};
  GcnLayer layer{Tensor2::identity(2)};
  GcnCache cache;
  const auto out = gcn_forward(a, h, layer, &cache);
  EXPECT_NEAR(cache.pre(0, 0), 1.4, 1e-15);
  EXPECT_NEAR(cache.pre(0, 1), -0.6, 1e-15);
  EXPECT_NEAR(cache.pre(1, 0), 1.5, 1e-15);
  EXPECT_NEAR(cache.pre(1, 1), -0.5, 1e-15);
  EXPECT_NEAR(out(0, 0), 1.4, 1e-15);
  EXPECT_EQ(out(0, 1), 0.0);
  EXPECT_NEAR(out(1, 0), 1.5, 1e-15);
  EXPECT_EQ(out(1, 1), 0.0);
}

TEST(Gcn, NegativePreActivationsAreZeroed) {
  Rng rng(3);
  const auto a = row_stochastic(4, rng);
  const auto h = random_tensor(4, 3, rng, 0.0, 1.0);
  GcnLayer layer{Tensor2{{1, -1}, {1, -1}, {1, -1}}};
  const auto out = gcn_forward(a, h, layer);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GT(out(i, 0), 0.0);
    EXPECT_EQ(out(i, 1), 0.0);
  }
}

TEST(Gcn, ZeroUpstreamGivesZeroGradients) {
  Rng rng(4);
  GcnLayer layer = make_gcn(3, 5, rng);
  GcnCache cache;
  gcn_forward(row_stochastic(3, rng), random_tensor(3, 3, rng), layer, &cache);
  GcnLayer grad{Tensor2(3, 5)};
  const auto dh = gcn_backward(layer, cache, Tensor2(3, 5), grad);
  for (double v : dh.values()) EXPECT_EQ(v, 0.0);
  for (double v : grad.weight.values()) EXPECT_EQ(v, 0.0);
}

TEST(Gcn, BackwardMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 10);
    GcnLayer layer = make_gcn(4, 3, rng);
    const auto a = row_stochastic(3, rng);
    Tensor2 h = random_tensor(3, 4, rng);
    const auto w_out = random_tensor(3, 3, rng);
    GcnCache cache;
    gcn_forward(a, h, layer, &cache);
    GcnLayer grad{Tensor2(4, 3)};
    Tensor2 dh = gcn_backward(layer, cache, w_out, grad);

    GradCheckOptions opt;
    opt.eps = 1e-5;
    opt.samples = 24;
    opt.gate_signature = [&] {
      GcnCache c;
      gcn_forward(a, h, layer, &c);
      return sign_hash(c.pre);
    };
    auto loss = [&] { return weighted_sum(gcn_forward(a, h, layer), w_out); };
    Tensor2* params[] = {&layer.weight, &h};
    const Tensor2* analytic[] = {&grad.weight, &dh};
    const auto r = finite_diff_check(params, analytic, loss, opt);
    EXPECT_LT(r.max_relative_error, 1e-6) << "seed " << seed;
    EXPECT_GT(r.checked, 0u);
  }
}

TEST(Gcn, IdentityAdjacencyReducesToDense) {
  Rng rng(6);
  GcnLayer g = make_gcn(4, 3, rng);
  DenseLayer d{g.weight, Tensor2(1, 3), Activation::ReLU};
  const auto h = random_tensor(5, 4, rng);
  const auto up = random_tensor(5, 3, rng);
  GcnCache gc;
  DenseCache dc;
  EXPECT_EQ(gcn_forward(Tensor2::identity(5), h, g, &gc), dense_forward(d, h, &dc));
  GcnLayer gg{Tensor2(4, 3)};
  DenseLayer dg{Tensor2(4, 3), Tensor2(1, 3), Activation::ReLU};
  const auto dhg = gcn_backward(g, gc, up, gg);
  const auto dhd = dense_backward(d, dc, up, dg);
  for (std::size_t i = 0; i < dhg.size(); ++i) EXPECT_NEAR(dhg.values()[i], dhd.values()[i], 1e-14);
  for (std::size_t i = 0; i < gg.weight.size(); ++i)
    EXPECT_NEAR(gg.weight.values()[i], dg.weight.values()[i], 1e-14);
}

TEST(Dense, IdentityLayerPassesThrough) {
  DenseLayer d{Tensor2::identity(3), Tensor2(1, 3), Activation::Identity};
  const Tensor2 x{{1, -2, 3}, {0.5, 0.25, -7}};
  EXPECT_EQ(dense_forward(d, x), x);
}

TEST(Dense, TanhOutputsStayOpen) {
  Rng rng(7);
  DenseLayer d = make_dense(5, 4, Activation::Tanh, rng);
  const auto y = dense_forward(d, random_tensor(50, 5, rng, -3, 3));
  for (double v : y.values()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
  for (Activation act : {Activation::ReLU, Activation::Tanh, Activation::Identity}) {
    Rng rng(8);
    DenseLayer d = make_dense(5, 4, act, rng);
    for (double& b : d.bias.values()) b = rng.uniform(-0.5, 0.5);
    Tensor2 x = random_tensor(3, 5, rng);
    const auto w_out = random_tensor(3, 4, rng);
    DenseCache cache;
    dense_forward(d, x, &cache);
    DenseLayer g{Tensor2(5, 4), Tensor2(1, 4), act};
    Tensor2 dx = dense_backward(d, cache, w_out, g);

    GradCheckOptions opt;
    opt.samples = 30;
    opt.gate_signature = [&] {
      DenseCache c;
      dense_forward(d, x, &c);
      return act == Activation::ReLU ? sign_hash(c.pre) : 0;
    };
    auto loss = [&] { return weighted_sum(dense_forward(d, x), w_out); };
    Tensor2* params[] = {&d.weight, &d.bias, &x};
    const Tensor2* analytic[] = {&g.weight, &g.bias, &dx};
    EXPECT_LT(finite_diff_check(params, analytic, loss, opt).max_relative_error, 1e-6)
        << to_string(act);
  }
}

TEST(Dense, InitializationScales) {
  Rng rng(9);
  const auto relu = make_dense(64, 32, Activation::ReLU, rng);
  const auto tanh = make_dense(64, 2, Activation::Tanh, rng);
  for (double v : relu.weight.values()) EXPECT_LE(std::abs(v), std::sqrt(6.0 / 64));
  for (double v : tanh.weight.values()) EXPECT_LE(std::abs(v), std::sqrt(6.0 / 66));
  for (double v : relu.bias.values()) EXPECT_EQ(v, 0.0);
}

TEST(Loss, ZeroAtTarget) {
  const Tensor2 u{{0.3, -0.2}};
  const auto r = action_loss(u, u);
  EXPECT_EQ(r.loss, 0.0);
  for (double g : r.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(Loss, SteeringErrorOnly) {
  EXPECT_DOUBLE_EQ(action_loss(Tensor2{{0.5, 0.1}}, Tensor2{{0.0, 0.1}}).loss, 0.25);
  EXPECT_DOUBLE_EQ(sample_loss(0.5, 0.1, 0.0, 0.1), 0.25);
}

TEST(Loss, BatchMeanOfSampleLosses) {
  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    const auto u = random_tensor(2, 2, rng), s = random_tensor(2, 2, rng);
    const double expect = 0.5 * (sample_loss(u(0, 0), u(0, 1), s(0, 0), s(0, 1)) +
                                 sample_loss(u(1, 0), u(1, 1), s(1, 0), s(1, 1)));
    const auto r = action_loss(u, s);
    EXPECT_NEAR(r.loss, expect, 1e-15);
    EXPECT_GE(r.loss, 0.0);
    EXPECT_NEAR(r.grad(1, 0), (u(1, 0) - s(1, 0)), 1e-15);  // 2 (u - u*) / B
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor2 p{{1.5, -2.0}};
  const Tensor2 before = p;
  const Tensor2 g(1, 2);
  Adam adam;
  Tensor2* ps[] = {&p};
  const Tensor2* gs[] = {&g};
  for (int i = 0; i < 5; ++i) adam.step(ps, gs);
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepHandEvaluated) {
  Tensor2 p{{0.0}};
  const Tensor2 g{{1.0}};
  Adam adam(AdamConfig{});
  Tensor2* ps[] = {&p};
  const Tensor2* gs[] = {&g};
  adam.step(ps, gs);
  // m = 0.1, v = 0.001; bias-corrected both are 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p(0, 0), -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p(0, 0), -0.001, 1e-6);
  EXPECT_EQ(adam.steps(), 1u);
  EXPECT_NEAR(adam.first_moments()[0](0, 0), 0.1, 1e-15);
  EXPECT_NEAR(adam.second_moments()[0](0, 0), 0.001, 1e-15);
}

TEST(Adam, SecondStepHandEvaluated) {
  Tensor2 p{{0.0}};
  Adam adam;
  Tensor2* ps[] = {&p};
  const Tensor2 g1{{1.0}}, g2{{-0.5}};
  const Tensor2* a[] = {&g1};
  const Tensor2* b[] = {&g2};
  adam.step(ps, a);
  adam.step(ps, b);
  const double m = 0.9 * 0.1 + 0.1 * -0.5, v = 0.999 * 0.001 + 0.001 * 0.25;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p(0, 0), -0.001 / (1 + 1e-8) - 0.001 * mhat / (std::sqrt(vhat) + 1e-8), 1e-15);
}

TEST(Adam, IdenticalRunsIdenticalTrajectories) {
  auto run = [] {
    Rng rng(11);
    Tensor2 p = random_tensor(3, 3, rng);
    Adam adam;
    for (int i = 0; i < 20; ++i) {
      Tensor2 g = random_tensor(3, 3, rng);
      Tensor2* ps[] = {&p};
      const Tensor2* gs[] = {&g};
      adam.step(ps, gs);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, MismatchedShapesRejected) {
  Tensor2 p(2, 2);
  const Tensor2 g(3, 2);
  Adam adam;
  Tensor2* ps[] = {&p};
  const Tensor2* gs[] = {&g};
  EXPECT_THROW(adam.step(ps, gs), ShapeError);
}

TEST(GradCheck, LinearNetworkIsExactToRoundOff) {
  Rng rng(12);
  DenseLayer l1 = make_dense(4, 6, Activation::Identity, rng);
  DenseLayer l2 = make_dense(6, 2, Activation::Identity, rng);
  for (double& b : l1.bias.values()) b = rng.uniform(-1, 1);
  const auto x = random_tensor(5, 4, rng);
  const auto t = random_tensor(5, 2, rng);
  DenseCache c1, c2;
  const auto y = dense_forward(l2, dense_forward(l1, x, &c1), &c2);
  const auto loss = action_loss(y, t);
  DenseLayer g1{Tensor2(4, 6), Tensor2(1, 6), Activation::Identity};
  DenseLayer g2{Tensor2(6, 2), Tensor2(1, 2), Activation::Identity};
  dense_backward(l1, c1, dense_backward(l2, c2, loss.grad, g2), g1);

  GradCheckOptions opt;
  opt.samples = 40;
  Tensor2* params[] = {&l1.weight, &l1.bias, &l2.weight, &l2.bias};
  const Tensor2* analytic[] = {&g1.weight, &g1.bias, &g2.weight, &g2.bias};
  const auto r = finite_diff_check(
      params, analytic, [&] { return action_loss(dense_forward(l2, dense_forward(l1, x)), t).loss; },
      opt);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_EQ(r.checked, 40u);
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-12, 0.0, 1e-6), 1e-6);
}

TEST(GradCheck, SkipsEntriesNearKinks) {
  // A ReLU sitting exactly at its kink makes any perturbation flip the gate.
  Tensor2 w{{0.0}};
  const Tensor2 g{{0.5}};
  GradCheckOptions opt;
  opt.samples = 1;
  opt.gate_signature = [&] { return std::uint64_t(w(0, 0) > 0.0); };
  Tensor2* params[] = {&w};
  const Tensor2* analytic[] = {&g};
  const auto r = finite_diff_check(params, analytic, [&] { return std::max(w(0, 0), 0.0); }, opt);
  EXPECT_EQ(r.checked, 0u);
  EXPECT_GT(r.skipped_near_kink, 0u);
}

TEST(Activation, NamesRoundTrip) {
  for (Activation a : {Activation::ReLU, Activation::Tanh, Activation::Identity})
    EXPECT_EQ(parse_activation(to_string(a)), a);
}
