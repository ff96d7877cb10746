#pragma once

// The learnable policy: a contractive REN in latent space, a linear
// projection to state space, and a coupling-layer output map.
//
//   z(0) = P_proj^+ g^-1(y0),   dz/dt = f(z),   y(t) = g(P_proj z(t))

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "renpol/bijection.hpp"
#include "renpol/ren.hpp"
#include "renpol/tensor.hpp"

namespace renpol {

struct PolicyConfig {
  std::size_t state_dim = 2;       // N_y
  std::size_t latent_dim = 32;     // N_z
  std::size_t implicit_dim = 16;   // N_v
  std::size_t coupling_layers = 4; // K
  std::size_t coupling_width = 32;
  double eps = 1e-2;
  double eps_P = 1.0;
  double s_clamp = 5.0;
  ren::ContractionRateSpec rate;

  void validate() const;
};

// Owns the free parameters in a fixed, named order.
class Policy {
public:
  Policy() = default;
  explicit Policy(PolicyConfig config);

  const PolicyConfig& config() const { return config_; }
  std::vector<ad::Parameter>& params() { return params_; }
  const std::vector<ad::Parameter>& params() const { return params_; }

  ad::Parameter& param(const std::string& name);
  const ad::Parameter& param(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;

  std::size_t num_scalars() const;
  void zero_grad();

private:
  PolicyConfig config_;
  std::vector<ad::Parameter> params_;
};

// Tensor view of a policy: either constants, or leaves on a tape.
struct PolicyModel {
  ren::RenParams ren;
  ad::Tensor gamma_raw;  // empty in fixed-rate mode
  ad::Tensor proj;       // N_y x N_z
  flow::BijectionStack stack;
  ren::ContractionRateSpec rate;
};

PolicyModel view(const Policy& policy);
// Leaves that accumulate into each Parameter's grad.
PolicyModel bind(Policy& policy, ad::Tape& tape);
// Free leaves (one per parameter, in parameter order), for per-tape gradient
// buffers that are reduced by the caller.
PolicyModel bind_variables(const Policy& policy, ad::Tape& tape, std::vector<ad::Tensor>& leaves);

// Assembled, ready-to-integrate policy.
struct CompiledPolicy {
  ren::RenMatrices mats;
  ad::Tensor gamma;      // scalar; tracked in learnable mode on a tape
  ad::Tensor proj;       // N_y x N_z
  ad::Tensor proj_pinv;  // N_z x N_y right inverse
  flow::BijectionStack stack;

  std::size_t state_dim() const { return proj.rows(); }
  std::size_t latent_dim() const { return proj.cols(); }
};

CompiledPolicy compile(const PolicyModel& model);
CompiledPolicy compile(const Policy& policy);

// Deterministic initialization: Gaussian free matrices (std 0.2/sqrt(fan_in)),
// lambda_log = 0, zero last layers in the coupling nets (g = identity),
// P_proj = [I | 0] plus small noise.
Policy init_policy(const PolicyConfig& config, std::uint64_t seed, double proj_noise = 1e-2);

// Every REN parameter ~ N(0, ren_std^2), coupling nets drawn like
// flow::random_stack(std_dev = flow_std) with last layers included,
// P_proj = [I | 0] + N(0, 0.1^2). For checks that must hold for arbitrary
// parameters.
Policy random_policy(const PolicyConfig& config, std::uint64_t seed, double ren_std = 0.5, double flow_std = 0.5);

}  // namespace renpol
