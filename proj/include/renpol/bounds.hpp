#pragma once

// Out-of-sample loss certificates for a trained contractive policy.
//
// For an initial state inside the multi-focal ellipse
//   { y : sum_m ||y - y0^m|| <= R }
// the MSE loss of its rollout is bounded by the lambda-weighted in-sample
// MSEs plus
//   alpha^2 R^2 (e^{-2 gamma} - 1) / (H M (e^{-2 gamma / H} - 1)),
// and the expected loss under any distribution on the ellipse by the
// largest in-sample MSE plus the same term.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "renpol/policy.hpp"
#include "renpol/rollout.hpp"

namespace renpol::bounds {

struct EllipseRegion {
  std::vector<std::vector<double>> foci;
  double R = 0.0;
};

struct Membership {
  bool inside = false;
  double slack = 0.0;  // sum_m ||y0 - y0^m|| - R
};

Membership in_region(const EllipseRegion& region, std::span<const double> y0);

// Smallest R with every point inside the region (tight encapsulating ellipse).
double region_scale(std::span<const std::vector<double>> foci, std::span<const std::vector<double>> points);

struct BoundInputs {
  double alpha = 1.0;
  double gamma = 1.0;
  std::size_t H = 1;
  std::size_t M = 1;
  double R = 0.0;
  std::vector<double> per_demo_mse;

  void validate() const;
};

// Closed form of the uncertainty term, with the geometric-series form
// (1/H) sum_{i<H} e^{-2 gamma i / H} alpha^2 R^2 / M where the closed form
// is numerically 0/0.
double term_two(double alpha, double R, double gamma, std::size_t H, std::size_t M);

// Theorem-style bound at y0; throws ValidationError outside the region.
double worst_case_bound(std::span<const double> y0, const EllipseRegion& region, const BoundInputs& in,
                        double eps_dist);

// Corollary-style bound on the expected loss: max per-demo MSE + term_two.
double true_loss_bound(const BoundInputs& in);

struct AlphaEstimate {
  double alpha = 0.0;   // raw Monte Carlo maximum
  std::size_t pairs = 0;  // non-degenerate pairs used
};

// max over pairs (a, b) and stored steps t of ||y^a(t) - y^b(t)|| e^{gamma t} / ||y^a(0) - y^b(0)||,
// from rollouts of the given initial states. Pairs closer than 1e-8 are skipped.
AlphaEstimate estimate_alpha(const CompiledPolicy& policy, std::span<const std::vector<double>> inits,
                             const rollout::SolverConfig& cfg);
AlphaEstimate estimate_alpha(std::span<const rollout::Trajectory> rollouts, double gamma);

// Safety factor applied to the Monte Carlo alpha before evaluating bounds.
inline constexpr double kAlphaSafety = 1.2;

}  // namespace renpol::bounds
