#include "renpol/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "renpol/loss.hpp"

namespace renpol::bounds {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double focal_sum(std::span<const std::vector<double>> foci, std::span<const double> y) {
  double s = 0.0;
  for (const auto& f : foci) {
    if (f.size() != y.size()) throw ShapeError("ellipse region: dimension mismatch");
    s += distance(y, f);
  }
  return s;
}

}  // namespace

Membership in_region(const EllipseRegion& region, std::span<const double> y0) {
  const double slack = focal_sum(region.foci, y0) - region.R;
  return {slack <= 0.0, slack};
}

double region_scale(std::span<const std::vector<double>> foci, std::span<const std::vector<double>> points) {
  double R = 0.0;
  for (const auto& p : points) R = std::max(R, focal_sum(foci, p));
  return R;
}

void BoundInputs::validate() const {
  if (!(alpha >= 0.0) || !(gamma > 0.0) || H < 1 || M < 1 || !(R >= 0.0))
    throw ValidationError("bound inputs: need alpha >= 0, gamma > 0, H >= 1, M >= 1, R >= 0");
  if (per_demo_mse.size() != M) throw ValidationError("bound inputs: per-demo MSE count must equal M");
  for (double v : per_demo_mse)
    if (!(v >= 0.0)) throw ValidationError("bound inputs: per-demo MSE must be non-negative");
}

double term_two(double alpha, double R, double gamma, std::size_t H, std::size_t M) {
  if (!(gamma >= 0.0) || H < 1 || M < 1) throw ValidationError("term_two: need gamma >= 0, H >= 1, M >= 1");
  const double Hd = static_cast<double>(H);
  const double scale = alpha * alpha * R * R / static_cast<double>(M);
  const double denom = std::expm1(-2.0 * gamma / Hd);
  if (H == 1 || std::abs(denom) < 1e-12) {
    double s = 0.0;
    for (std::size_t i = 0; i < H; ++i) s += std::exp(-2.0 * gamma * static_cast<double>(i) / Hd);
    return scale * s / Hd;
  }
  return scale * std::expm1(-2.0 * gamma) / (Hd * denom);
}

double worst_case_bound(std::span<const double> y0, const EllipseRegion& region, const BoundInputs& in,
                        double eps_dist) {
  in.validate();
  if (region.foci.size() != in.M) throw ValidationError("worst_case_bound: region foci count must equal M");
  const Membership mem = in_region(region, y0);
  if (!mem.inside) {
    std::ostringstream os;
    os << "worst_case_bound: initial state lies outside the multi-focal ellipse (sum of focal distances exceeds R by "
       << mem.slack << "); the bound assumes the ellipse region";
    throw ValidationError(os.str());
  }
  const auto lambda = loss::lambda_weights(y0, region.foci, eps_dist);
  double first = 0.0;
  for (std::size_t m = 0; m < in.M; ++m) first += lambda[m] * in.per_demo_mse[m];
  return first + term_two(in.alpha, in.R, in.gamma, in.H, in.M);
}

double true_loss_bound(const BoundInputs& in) {
  in.validate();
  return *std::max_element(in.per_demo_mse.begin(), in.per_demo_mse.end()) +
         term_two(in.alpha, in.R, in.gamma, in.H, in.M);
}

AlphaEstimate estimate_alpha(std::span<const rollout::Trajectory> rollouts, double gamma) {
  if (rollouts.size() < 2) throw ValidationError("estimate_alpha: need at least 2 sampled initial states");
  AlphaEstimate est;
  for (std::size_t a = 0; a < rollouts.size(); ++a)
    for (std::size_t b = a + 1; b < rollouts.size(); ++b) {
      const auto& ra = rollouts[a];
      const auto& rb = rollouts[b];
      const double d0 = distance(ra.state(0), rb.state(0));
      if (d0 < 1e-8) continue;
      ++est.pairs;
      const std::size_t H = std::min(ra.horizon, rb.horizon);
      for (std::size_t t = 0; t < H; ++t) {
        const double ratio = distance(ra.state(t), rb.state(t)) * std::exp(gamma * ra.dt * static_cast<double>(t)) / d0;
        est.alpha = std::max(est.alpha, ratio);
      }
    }
  if (est.pairs == 0) throw ValidationError("estimate_alpha: all sampled pairs are degenerate");
  return est;
}

AlphaEstimate estimate_alpha(const CompiledPolicy& policy, std::span<const std::vector<double>> inits,
                             const rollout::SolverConfig& cfg) {
  if (inits.size() < 2) throw ValidationError("estimate_alpha: need at least 2 sampled initial states");
  const auto rolls = rollout::rollout_batch(policy, inits, cfg);
  return estimate_alpha(rolls, policy.mats.gamma);
}

}  // namespace renpol::bounds
