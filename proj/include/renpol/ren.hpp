#pragma once

// Continuous-time recurrent equilibrium network whose latent dynamics
//
//   dz/dt = A z + B1 w,   w = tanh(C1 z + D11 w)
//
// contract at rate gamma in the metric P for every value of the free
// parameters. The contraction LMI block matrix
//
//   M = [ -A'P - PA - 2 gamma P     -C1' Lambda - P B1          ]
//       [ -Lambda C1 - B1' P         2 Lambda - Lambda D11 - D11' Lambda ]
//
// is made equal to X'X + eps I by construction, so M >= eps I always.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "renpol/tensor.hpp"

namespace renpol::ren {

using ad::Tensor;

struct RenParams {
  std::size_t n = 0;  // latent dimension
  std::size_t q = 0;  // implicit-layer width
  double eps = 1e-2;
  double eps_P = 1.0;
  Tensor X;           // (n+q) x (n+q)
  Tensor X_P;         // n x n
  Tensor lambda_log;  // q
  Tensor S_A;         // n x n, skew source for A
  Tensor S_D;         // q x q, skew source for D11
  Tensor B1;          // n x q

  void validate() const;
};

struct RenMatrices {
  Tensor A;       // n x n
  Tensor B1;      // n x q
  Tensor C1;      // q x n
  Tensor D11;     // q x q
  Tensor P;       // n x n, contraction metric
  Tensor Lambda;  // q x q diagonal
  double gamma = 0.0;

  std::size_t n() const { return A.rows(); }
  std::size_t q() const { return D11.rows(); }
};

enum class RateMode { fixed, learnable };

struct ContractionRateSpec {
  RateMode mode = RateMode::fixed;
  double value = 1.0;      // fixed mode
  double gamma_min = 0.5;  // learnable mode floor
};

// gamma = gamma_min + softplus(gamma_raw) (learnable) or the fixed value.
Tensor effective_gamma(const ContractionRateSpec& spec, const Tensor& gamma_raw);
// Inverse of the learnable map, for initializing gamma_raw at a target rate.
double gamma_raw_for(const ContractionRateSpec& spec, double gamma);

// Builds the contractive system. `gamma` may be tracked (learnable rate).
RenMatrices assemble(const RenParams& params, const Tensor& gamma);
RenMatrices assemble(const RenParams& params, double gamma);

// H = X'X + eps I, the matrix M is constructed to equal.
std::vector<double> lmi_target(const RenParams& params);
// M rebuilt from the assembled matrices (row-major, (n+q)^2 values).
std::vector<double> lmi_matrix(const RenMatrices& mats);
double lmi_eig_min(const RenMatrices& mats);

// Solves w = tanh(C1 z + D11 w). Gradients w.r.t. C1, D11 and z use the
// implicit function theorem at the solution.
Tensor equilibrium(const Tensor& C1, const Tensor& D11, const Tensor& z);

// Residual ||w - tanh(C1 z + D11 w)||_2 for a candidate w.
double equilibrium_residual(const RenMatrices& mats, std::span<const double> z, std::span<const double> w);

Tensor latent_derivative(const RenMatrices& mats, const Tensor& z);

// dz' P dz
double contraction_metric_energy(const RenMatrices& mats, std::span<const double> dz);

// Gaussian free parameters with the given entry std, for tests and self-checks.
RenParams random_params(std::size_t n, std::size_t q, std::mt19937_64& rng, double std_dev = 0.5,
                        double eps = 1e-2, double eps_P = 1.0);

}  // namespace renpol::ren
