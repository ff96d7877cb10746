#pragma once

// Output map g = g_1 o ... o g_K built from affine coupling layers. Each layer
// keeps one half of the vector fixed and moves the other half by a scale and
// shift computed from the fixed half, so it is exactly invertible.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "renpol/tensor.hpp"

namespace renpol::flow {

using ad::Tensor;

// Two-hidden-layer tanh perceptron: in -> width -> width -> out.
struct Mlp {
  Tensor W1, b1, W2, b2, W3, b3;

  Tensor operator()(const Tensor& x) const;
};

struct CouplingLayer {
  std::size_t dim = 0;
  int parity = 0;  // 0: leading ceil(dim/2) entries are static; 1: trailing
  Mlp s_net;
  Mlp t_net;
  double s_clamp = 5.0;

  std::size_t static_count() const { return (dim + 1) / 2; }
  std::size_t static_offset() const { return parity == 0 ? 0 : dim - static_count(); }
  std::size_t moving_offset() const { return parity == 0 ? static_count() : 0; }
  std::size_t moving_count() const { return dim - static_count(); }

  Tensor forward(const Tensor& y) const;
  Tensor inverse(const Tensor& y) const;
};

struct BijectionStack {
  std::vector<CouplingLayer> layers;  // layers[0] is g_1 (applied last)

  std::size_t size() const { return layers.size(); }
};

Tensor forward(const BijectionStack& stack, const Tensor& y);
Tensor inverse(const BijectionStack& stack, const Tensor& y);

// Max over sample pairs of ||g(a) - g(b)|| / ||a - b||.
double lipschitz_estimate(const BijectionStack& stack, std::span<const std::vector<double>> samples);

// Upper bound on the Lipschitz constant of g over the box ||y||_inf <= radius,
// from per-layer Jacobian norm bounds (Frobenius norms of the net weights).
double lipschitz_bound(const BijectionStack& stack, double radius);

// Stack with Gaussian weights (all layers, including the last ones): weight
// matrices N(0, std_dev^2 / fan_in), biases N(0, std_dev^2).
BijectionStack random_stack(std::size_t K, std::size_t dim, std::size_t width, std::mt19937_64& rng,
                            double std_dev = 0.5, double s_clamp = 5.0);

}  // namespace renpol::flow
