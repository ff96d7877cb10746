#pragma once

// Differentiable initial-value problem solving for a compiled policy:
// encode y0 into latent space, integrate the REN with a fixed-step solver
// (every step stays on the tape when inputs are tracked), decode each stored
// latent state.
//
// Batch evaluation comes in two flavors with identical results: an OpenMP
// kernel that spreads initial states across threads, and a serial reference.

#include <cstddef>
#include <span>
#include <vector>

#include "renpol/policy.hpp"
#include "renpol/tensor.hpp"

namespace renpol::rollout {

using ad::Tensor;

enum class Method { euler, rk4 };

struct SolverConfig {
  Method method = Method::rk4;
  std::size_t horizon = 30;  // stored states H, including y0
  std::size_t substeps = 1;  // integration steps between stored states
  double duration = 1.0;     // time spanned by the H stored states

  void validate() const;
  // integration step
  double dt() const { return duration / (static_cast<double>(horizon - 1) * static_cast<double>(substeps)); }
  // spacing of stored states
  double sample_dt() const { return duration / static_cast<double>(horizon - 1); }
};

// Time-ordered states, H x N_y row-major.
struct Trajectory {
  std::size_t horizon = 0;
  std::size_t dim = 0;
  double dt = 0.0;
  std::vector<double> states;

  std::span<const double> state(std::size_t i) const { return {states.data() + i * dim, dim}; }
  std::span<double> state(std::size_t i) { return {states.data() + i * dim, dim}; }
  void validate() const;
};

Trajectory to_trajectory(std::span<const Tensor> states, double dt);
// Untracked H x N_y tensor of the states.
Tensor as_tensor(const Trajectory& traj);

// P^T (P P^T)^-1. Throws if cond(P P^T) > 1e12.
Tensor pseudo_inverse(const Tensor& proj);

Tensor encode_initial(const CompiledPolicy& policy, const Tensor& y0);
Tensor decode(const CompiledPolicy& policy, const Tensor& z);

// Latent trajectory of H states (z0 first).
std::vector<Tensor> integrate(const ren::RenMatrices& mats, const Tensor& z0, const SolverConfig& cfg);

// Decoded rollout as tensors (tracked when the policy is).
std::vector<Tensor> rollout_states(const CompiledPolicy& policy, const Tensor& y0, const SolverConfig& cfg);

Trajectory rollout(const CompiledPolicy& policy, std::span<const double> y0, const SolverConfig& cfg);

// Latent and decoded rollout together (untracked), for metric checks.
struct LatentRollout {
  std::vector<std::vector<double>> latent;
  Trajectory states;
};
LatentRollout rollout_with_latent(const CompiledPolicy& policy, std::span<const double> y0,
                                  const SolverConfig& cfg);

// Untracked rollouts from many initial states; the policy must not be on a tape.
std::vector<Trajectory> rollout_batch(const CompiledPolicy& policy, std::span<const std::vector<double>> inits,
                                      const SolverConfig& cfg);
std::vector<Trajectory> rollout_batch_serial(const CompiledPolicy& policy,
                                             std::span<const std::vector<double>> inits,
                                             const SolverConfig& cfg);

}  // namespace renpol::rollout
