#include "renpol/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace renpol::loss {

namespace ad = renpol::ad;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": trajectories must be H x N_y with equal N_y, got " +
                     ad::shape_str(a.shape()) + " and " + ad::shape_str(b.shape()));
  if (a.rows() == 0 || b.rows() == 0) throw ValidationError(std::string(op) + ": empty trajectory");
}

double sq_dist(const double* x, const double* y, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s;
}

}  // namespace

void Metric::validate() const {
  if (kind == MetricKind::soft_dtw && !(beta > 0.0)) throw ValidationError("soft-DTW beta must be positive");
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_pair("mse", a, b);
  if (a.rows() != b.rows()) {
    std::ostringstream os;
    os << "mse: trajectory lengths differ (" << a.rows() << " vs " << b.rows() << ")";
    throw ValidationError(os.str());
  }
  return ad::scale(ad::sum(ad::square(ad::sub(a, b))), 1.0 / static_cast<double>(a.rows()));
}

double mse(const Trajectory& a, const Trajectory& b) { return mse(rollout::as_tensor(a), rollout::as_tensor(b)).item(); }

Tensor soft_dtw(const Tensor& a, const Tensor& b, double beta) {
  check_pair("soft_dtw", a, b);
  if (!(beta > 0.0)) throw ValidationError("soft_dtw: beta must be positive");
  const std::size_t n = a.rows();
  const std::size_t m = b.rows();
  const std::size_t d = a.cols();
  const std::size_t W = m + 1;
  const auto av = a.data();
  const auto bv = b.data();

  // R on an (n+1) x (m+1) grid with an infinite border; weights[cell*3 + k]
  // holds the soft-min probabilities of the (up, left, diagonal) predecessors.
  std::vector<double> R((n + 1) * W, kInf);
  R[0] = 0.0;
  const bool track = a.tracked() || b.tracked();
  std::vector<double> weights(track ? (n + 1) * W * 3 : 0, 0.0);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const double prev[3] = {R[(i - 1) * W + j], R[i * W + j - 1], R[(i - 1) * W + j - 1]};
      double lo = kInf;
      for (double p : prev) lo = std::min(lo, p);
      // soft-min^beta(x) = -beta log sum exp(-x/beta), shifted by the hard min
      double s = 0.0;
      double e[3];
      for (int k = 0; k < 3; ++k) {
        e[k] = std::isinf(prev[k]) ? 0.0 : std::exp(-(prev[k] - lo) / beta);
        s += e[k];
      }
      const double softmin = lo - beta * std::log(s);
      const double cost = sq_dist(av.data() + (i - 1) * d, bv.data() + (j - 1) * d, d);
      R[i * W + j] = cost + softmin;
      if (track)
        for (int k = 0; k < 3; ++k) weights[(i * W + j) * 3 + k] = e[k] / s;
    }
  const double value = R[n * W + m];
  if (!track) return Tensor({}, {value});

  std::vector<double> ac(av.begin(), av.end());
  std::vector<double> bc(bv.begin(), bv.end());
  return ad::make_op(
      "soft_dtw", Tensor({}, {value}), {&a, &b},
      [ac = std::move(ac), bc = std::move(bc), weights = std::move(weights), n, m, d, W](
          std::span<const double> g, std::span<double* const> in) {
        std::vector<double> G((n + 1) * W, 0.0);
        G[n * W + m] = g[0];
        for (std::size_t i = n; i >= 1; --i)
          for (std::size_t j = m; j >= 1; --j) {
            const double gij = G[i * W + j];
            if (gij == 0.0) continue;
            const double* w = &weights[(i * W + j) * 3];
            G[(i - 1) * W + j] += gij * w[0];
            G[i * W + j - 1] += gij * w[1];
            G[(i - 1) * W + j - 1] += gij * w[2];
            for (std::size_t k = 0; k < d; ++k) {
              const double diff = 2.0 * gij * (ac[(i - 1) * d + k] - bc[(j - 1) * d + k]);
              if (in[0]) in[0][(i - 1) * d + k] += diff;
              if (in[1]) in[1][(j - 1) * d + k] -= diff;
            }
          }
      });
}

double soft_dtw(const Trajectory& a, const Trajectory& b, double beta) {
  return soft_dtw(rollout::as_tensor(a), rollout::as_tensor(b), beta).item();
}

double dtw_classic(const Trajectory& a, const Trajectory& b) {
  if (a.horizon == 0 || b.horizon == 0) throw ValidationError("dtw_classic: empty trajectory");
  if (a.dim != b.dim) throw ShapeError("dtw_classic: state dimensions differ");
  const std::size_t n = a.horizon;
  const std::size_t m = b.horizon;
  const std::size_t W = m + 1;
  std::vector<double> R((n + 1) * W, kInf);
  R[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const double prev = std::min({R[(i - 1) * W + j], R[i * W + j - 1], R[(i - 1) * W + j - 1]});
      R[i * W + j] = sq_dist(a.state(i - 1).data(), b.state(j - 1).data(), a.dim) + prev;
    }
  return R[n * W + m];
}

Tensor discrepancy(const Tensor& a, const Tensor& b, const Metric& metric) {
  return metric.kind == MetricKind::mse ? mse(a, b) : soft_dtw(a, b, metric.beta);
}

double discrepancy(const Trajectory& a, const Trajectory& b, const Metric& metric) {
  return discrepancy(rollout::as_tensor(a), rollout::as_tensor(b), metric).item();
}

std::vector<double> lambda_weights(std::span<const double> y0_hat, std::span<const std::vector<double>> inits,
                                   double eps_dist) {
  if (inits.empty()) throw ValidationError("lambda_weights: need at least one demonstration");
  if (!(eps_dist > 0.0)) throw ValidationError("lambda_weights: eps_dist must be positive");
  std::vector<double> w(inits.size());
  double total = 0.0;
  for (std::size_t m = 0; m < inits.size(); ++m) {
    if (inits[m].size() != y0_hat.size()) throw ShapeError("lambda_weights: initial-state dimension mismatch");
    w[m] = 1.0 / std::max(sq_dist(y0_hat.data(), inits[m].data(), y0_hat.size()), eps_dist);
    total += w[m];
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

std::vector<double> first_row(const Tensor& t) { return {t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(t.cols())}; }

}  // namespace

Tensor weighted_loss(const Tensor& rollout, std::span<const Tensor> demos, const Metric& metric, double eps_dist) {
  metric.validate();
  if (demos.empty()) throw ValidationError("weighted_loss: no demonstrations");
  std::vector<std::vector<double>> inits;
  for (const auto& d : demos) inits.push_back(first_row(d));
  const auto lambda = lambda_weights(first_row(rollout), inits, eps_dist);
  Tensor total;
  for (std::size_t m = 0; m < demos.size(); ++m) {
    const Tensor term = ad::scale(discrepancy(rollout, demos[m], metric), lambda[m]);
    total = m == 0 ? term : ad::add(total, term);
  }
  return total;
}

double weighted_loss(const Trajectory& rollout, std::span<const Trajectory> demos, const Metric& metric,
                     double eps_dist) {
  std::vector<Tensor> ds;
  for (const auto& d : demos) ds.push_back(rollout::as_tensor(d));
  return weighted_loss(rollout::as_tensor(rollout), ds, metric, eps_dist).item();
}

double empirical_loss(const CompiledPolicy& policy, std::span<const Trajectory> demos,
                      const rollout::SolverConfig& cfg, const Metric& metric) {
  if (demos.empty()) throw ValidationError("empirical_loss: no demonstrations");
  std::vector<std::vector<double>> inits;
  for (const auto& d : demos) inits.emplace_back(d.state(0).begin(), d.state(0).end());
  const auto rolls = rollout::rollout_batch(policy, inits, cfg);
  double total = 0.0;
  for (std::size_t m = 0; m < demos.size(); ++m) total += discrepancy(rolls[m], demos[m], metric);
  return total / static_cast<double>(demos.size());
}

double augmented_loss(double empirical, double gamma, double mu, double c, double gamma0) {
  if (!(gamma > gamma0)) throw ValidationError("augmented_loss: gamma must exceed gamma0");
  const double h = 1.0 / ((gamma - gamma0) * (gamma - gamma0));
  return empirical - mu * (h - c);
}

Tensor augmented_loss(const Tensor& empirical, const Tensor& gamma, double mu, double c, double gamma0) {
  if (!(gamma.item() > gamma0)) throw ValidationError("augmented_loss: gamma must exceed gamma0");
  const Tensor gap = ad::add_scalar(gamma, -gamma0);
  const Tensor h = ad::exp(ad::scale(ad::log(gap), -2.0));
  return ad::sub(empirical, ad::scale(ad::add_scalar(h, -c), mu));
}

}  // namespace renpol::loss
