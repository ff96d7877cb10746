#include "renpol/bijection.hpp"

#include <algorithm>
#include <cmath>

namespace renpol::flow {

namespace ad = renpol::ad;

Tensor Mlp::operator()(const Tensor& x) const {
  const Tensor h1 = ad::tanh(ad::add(ad::matmul(W1, x), b1));
  const Tensor h2 = ad::tanh(ad::add(ad::matmul(W2, h1), b2));
  return ad::add(ad::matmul(W3, h2), b3);
}

namespace {

Tensor join(const CouplingLayer& layer, const Tensor& keep, const Tensor& moved) {
  return layer.parity == 0 ? ad::concat({keep, moved}) : ad::concat({moved, keep});
}

void check_dim(const CouplingLayer& layer, const Tensor& y) {
  if (y.rank() != 1 || y.size() != layer.dim)
    throw ShapeError("coupling layer: expected vector of length " + std::to_string(layer.dim) + ", got " +
                     ad::shape_str(y.shape()));
}

}  // namespace

Tensor CouplingLayer::forward(const Tensor& y) const {
  check_dim(*this, y);
  if (moving_count() == 0) return y;
  const Tensor keep = ad::slice(y, static_offset(), static_count());
  const Tensor move = ad::slice(y, moving_offset(), moving_count());
  const Tensor s = ad::scale(ad::tanh(s_net(keep)), s_clamp);
  const Tensor t = t_net(keep);
  return join(*this, keep, ad::add(ad::mul(move, ad::exp(s)), t));
}

Tensor CouplingLayer::inverse(const Tensor& y) const {
  check_dim(*this, y);
  if (moving_count() == 0) return y;
  const Tensor keep = ad::slice(y, static_offset(), static_count());
  const Tensor move = ad::slice(y, moving_offset(), moving_count());
  const Tensor s = ad::scale(ad::tanh(s_net(keep)), -s_clamp);
  const Tensor t = t_net(keep);
  return join(*this, keep, ad::mul(ad::sub(move, t), ad::exp(s)));
}

Tensor forward(const BijectionStack& stack, const Tensor& y) {
  Tensor out = y;
  for (std::size_t k = stack.layers.size(); k-- > 0;) out = stack.layers[k].forward(out);
  return out;
}

Tensor inverse(const BijectionStack& stack, const Tensor& y) {
  Tensor out = y;
  for (const auto& layer : stack.layers) out = layer.inverse(out);
  return out;
}

double lipschitz_estimate(const BijectionStack& stack, std::span<const std::vector<double>> samples) {
  std::vector<std::vector<double>> images;
  images.reserve(samples.size());
  for (const auto& s : samples) images.push_back(forward(stack, Tensor::vector(s)).values());
  double best = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double din = 0.0;
      double dout = 0.0;
      for (std::size_t k = 0; k < samples[i].size(); ++k) {
        din += (samples[i][k] - samples[j][k]) * (samples[i][k] - samples[j][k]);
        dout += (images[i][k] - images[j][k]) * (images[i][k] - images[j][k]);
      }
      if (din == 0.0) continue;
      any = true;
      best = std::max(best, std::sqrt(dout / din));
    }
  if (!any) throw ValidationError("lipschitz_estimate: need at least 2 distinct samples");
  return best;
}

namespace {

double frobenius(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

double net_gain(const Mlp& net) { return frobenius(net.W1) * frobenius(net.W2) * frobenius(net.W3); }

// |t_net(x)|_inf <= sum_j |W3_ij| + |b3_i| since hidden units are in [-1, 1].
double shift_bound(const Mlp& net) {
  const std::size_t rows = net.W3.rows();
  const std::size_t cols = net.W3.cols();
  double best = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double s = std::abs(net.b3[i]);
    for (std::size_t j = 0; j < cols; ++j) s += std::abs(net.W3.at(i, j));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

double lipschitz_bound(const BijectionStack& stack, double radius) {
  // Layers act from g_K inward to g_1; track an inf-norm box on each input.
  double box = radius;
  double total = 1.0;
  for (std::size_t k = stack.layers.size(); k-- > 0;) {
    const auto& layer = stack.layers[k];
    if (layer.moving_count() == 0) continue;
    const double e = std::exp(layer.s_clamp);
    // Jacobian [[I, 0], [L, diag(e^s)]], L = diag(y_move e^s) s_clamp ds_raw + dt
    const double lower = box * e * layer.s_clamp * net_gain(layer.s_net) + net_gain(layer.t_net);
    total *= std::max(1.0, e) + lower;
    box = std::max(box, box * e + shift_bound(layer.t_net));
  }
  return total;
}

BijectionStack random_stack(std::size_t K, std::size_t dim, std::size_t width, std::mt19937_64& rng,
                            double std_dev, double s_clamp) {
  std::normal_distribution<double> normal(0.0, 1.0);
  // weights scaled by 1/sqrt(fan_in), biases by std_dev alone
  auto draw = [&](ad::Shape shape) {
    const double s = shape.size() == 2 ? std_dev / std::sqrt(static_cast<double>(shape[1])) : std_dev;
    Tensor t(std::move(shape));
    for (double& v : t.mutable_data()) v = s * normal(rng);
    return t;
  };
  BijectionStack stack;
  for (std::size_t k = 0; k < K; ++k) {
    CouplingLayer layer;
    layer.dim = dim;
    layer.parity = static_cast<int>(k % 2);
    layer.s_clamp = s_clamp;
    const std::size_t in = layer.static_count();
    const std::size_t out = layer.moving_count();
    for (Mlp* net : {&layer.s_net, &layer.t_net}) {
      net->W1 = draw({width, in});
      net->b1 = draw({width});
      net->W2 = draw({width, width});
      net->b2 = draw({width});
      net->W3 = draw({out, width});
      net->b3 = draw({out});
    }
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

}  // namespace renpol::flow
