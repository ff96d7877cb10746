#include <cmath>
#include <random>

#include "doctest.h"
#include "renpol/bijection.hpp"

using namespace renpol;
using namespace renpol::flow;
using ad::Tensor;

namespace {

Tensor random_vec(std::size_t n, std::mt19937_64& rng, double std_dev = 1.0) {
  std::normal_distribution<double> normal(0.0, std_dev);
  Tensor t({n});
  for (double& v : t.mutable_data()) v = normal(rng);
  return t;
}

double rel_err(const Tensor& a, const Tensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

BijectionStack zero_stack(std::size_t K, std::size_t dim, std::size_t width) {
  BijectionStack stack;
  const std::size_t keep = (dim + 1) / 2, move = dim - keep;
  for (std::size_t k = 0; k < K; ++k) {
    CouplingLayer layer;
    layer.dim = dim;
    layer.parity = static_cast<int>(k % 2);
    for (Mlp* net : {&layer.s_net, &layer.t_net}) {
      net->W1 = Tensor({width, keep});
      net->b1 = Tensor({width});
      net->W2 = Tensor({width, width});
      net->b2 = Tensor({width});
      net->W3 = Tensor({move, width});
      net->b3 = Tensor({move});
    }
    stack.layers.push_back(layer);
  }
  return stack;
}

}  // namespace

TEST_CASE("empty stack and zero-weight stack are the identity") {
  std::mt19937_64 rng(21);
  const Tensor y = random_vec(5, rng);
  CHECK(forward(BijectionStack{}, y).values() == y.values());
  CHECK(inverse(BijectionStack{}, y).values() == y.values());
  const auto zero = zero_stack(3, 5, 4);
  CHECK(forward(zero, y).values() == y.values());
  CHECK(inverse(zero, y).values() == y.values());
  const std::vector<std::vector<double>> pts = {{0, 0, 0, 0, 0}, {1, 2, 3, 4, 5}, {-1, 0, 2, 0, 1}};
  CHECK(lipschitz_estimate(zero, pts) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("round trips in both directions across depths and dimensions") {
  std::mt19937_64 rng(22);
  double worst = 0.0;
  for (std::size_t K = 0; K <= 8; ++K)
    for (std::size_t dim = 2; dim <= 14; dim += 3) {
      const auto stack = random_stack(K, dim, 16, rng);
      for (int i = 0; i < 10; ++i) {
        const Tensor y = random_vec(dim, rng);
        worst = std::max(worst, rel_err(inverse(stack, forward(stack, y)), y));
        worst = std::max(worst, rel_err(forward(stack, inverse(stack, y)), y));
      }
    }
  CHECK(worst <= 1e-9);
}

TEST_CASE("scale factor stays within the clamp") {
  std::mt19937_64 rng(23);
  // huge weights saturate the tanh clamp
  auto stack = random_stack(1, 2, 8, rng, 50.0, 0.7);
  const auto& layer = stack.layers[0];
  for (int i = 0; i < 50; ++i) {
    const Tensor y = random_vec(2, rng, 3.0);
    const Tensor out = layer.forward(y);
    const double x_fixed = y[layer.static_offset()];
    CHECK(out[layer.static_offset()] == x_fixed);
    const double t = layer.t_net(ad::slice(y, layer.static_offset(), 1))[0];
    const double factor = (out[layer.moving_offset()] - t) / y[layer.moving_offset()];
    CHECK(factor <= std::exp(0.7) * (1 + 1e-12));
    CHECK(factor >= std::exp(-0.7) * (1 - 1e-12));
  }
}

TEST_CASE("layers alternate parity and keep the static half fixed") {
  std::mt19937_64 rng(24);
  const auto stack = random_stack(4, 5, 8, rng);
  for (std::size_t k = 0; k < 4; ++k) CHECK(stack.layers[k].parity == static_cast<int>(k % 2));
  const Tensor y = random_vec(5, rng);
  const Tensor out = stack.layers[1].forward(y);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[2 + i] == y[2 + i]);
}

TEST_CASE("stack gradients match finite differences") {
  std::mt19937_64 rng(25);
  const auto stack = random_stack(3, 4, 6, rng);
  const Tensor y = random_vec(4, rng);
  const Tensor u = random_vec(4, rng);
  CHECK(ad::grad_check([&](const Tensor& v) { return ad::dot(u, forward(stack, v)); }, y, 1e-6) <= 1e-6);
  CHECK(ad::grad_check([&](const Tensor& v) { return ad::dot(u, inverse(stack, v)); }, y, 1e-6) <= 1e-6);
  const auto through_w2 = [&](const Tensor& w) {
    auto s = stack;
    s.layers[1].s_net.W2 = w;
    return ad::dot(u, forward(s, y));
  };
  CHECK(ad::grad_check(through_w2, stack.layers[1].s_net.W2, 1e-6) <= 1e-5);
}

TEST_CASE("Lipschitz bound dominates the sampled estimate") {
  std::mt19937_64 rng(26);
  const auto stack = random_stack(3, 2, 8, rng);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  std::vector<std::vector<double>> pts(200, std::vector<double>(2));
  for (auto& p : pts)
    for (double& v : p) v = box(rng);
  const double est = lipschitz_estimate(stack, pts);
  CHECK(est >= 0.0);
  CHECK(lipschitz_bound(stack, 1.0) >= est);
}

TEST_CASE("dimension mismatch is a shape error") {
  std::mt19937_64 rng(27);
  const auto stack = random_stack(2, 3, 4, rng);
  CHECK_THROWS_AS((void)forward(stack, Tensor({4})), ShapeError);
}
