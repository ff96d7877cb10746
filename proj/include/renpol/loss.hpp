#pragma once

// Trajectory discrepancies and the imitation losses built from them.

#include <cstddef>
#include <span>
#include <vector>

#include "renpol/policy.hpp"
#include "renpol/rollout.hpp"
#include "renpol/tensor.hpp"

namespace renpol::loss {

using ad::Tensor;
using rollout::Trajectory;

enum class MetricKind { mse, soft_dtw };

struct Metric {
  MetricKind kind = MetricKind::mse;
  double beta = 0.1;  // soft-DTW smoothing

  void validate() const;
};

// (1/H) sum_i ||a_i - b_i||^2 on H x N_y tensors.
Tensor mse(const Tensor& a, const Tensor& b);
double mse(const Trajectory& a, const Trajectory& b);

// Soft-DTW over the squared-Euclidean cost grid, soft-min via a shifted
// log-sum-exp. Records a single tape node with an analytic backward sweep.
Tensor soft_dtw(const Tensor& a, const Tensor& b, double beta);
double soft_dtw(const Trajectory& a, const Trajectory& b, double beta);

// Hard-min DTW, same recurrence and cost.
double dtw_classic(const Trajectory& a, const Trajectory& b);

Tensor discrepancy(const Tensor& a, const Tensor& b, const Metric& metric);
double discrepancy(const Trajectory& a, const Trajectory& b, const Metric& metric);

// lambda_m proportional to 1 / max(||y0_hat - y0^m||^2, eps_dist), summing to 1.
std::vector<double> lambda_weights(std::span<const double> y0_hat, std::span<const std::vector<double>> inits,
                                   double eps_dist);

// sum_m lambda_m(rollout_0) l(rollout, demo_m). `rollout` is H x N_y.
Tensor weighted_loss(const Tensor& rollout, std::span<const Tensor> demos, const Metric& metric, double eps_dist);
double weighted_loss(const Trajectory& rollout, std::span<const Trajectory> demos, const Metric& metric,
                     double eps_dist);

// Mean over demos of l(rollout(policy, y0^m), y^m).
double empirical_loss(const CompiledPolicy& policy, std::span<const Trajectory> demos,
                      const rollout::SolverConfig& cfg, const Metric& metric);

// L - mu (1/(gamma - gamma0)^2 - c). Throws if gamma <= gamma0.
double augmented_loss(double empirical, double gamma, double mu, double c, double gamma0);
Tensor augmented_loss(const Tensor& empirical, const Tensor& gamma, double mu, double c, double gamma0);

}  // namespace renpol::loss
