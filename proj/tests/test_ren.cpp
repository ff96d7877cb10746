#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "renpol/ren.hpp"

using namespace renpol;
using namespace renpol::ren;
using ad::Tensor;

namespace {

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t.at(r, c);
  return m;
}

RenParams zero_params(std::size_t n, std::size_t q, double eps, double eps_P) {
  RenParams p;
  p.n = n;
  p.q = q;
  p.eps = eps;
  p.eps_P = eps_P;
  p.X = Tensor({n + q, n + q});
  p.X_P = Tensor({n, n});
  p.lambda_log = Tensor({q});
  p.S_A = Tensor({n, n});
  p.S_D = Tensor({q, q});
  p.B1 = Tensor({n, q});
  return p;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

}  // namespace

TEST_CASE("zero parameters give the closed-form system") {
  const auto mats = assemble(zero_params(2, 1, 0.1, 1.0), 1.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(mats.A.at(i, j) == doctest::Approx(i == j ? -1.05 : 0.0).epsilon(1e-14));
  CHECK(mats.D11.at(0, 0) == doctest::Approx(1.0 - 0.05 / mats.Lambda.at(0, 0)).epsilon(1e-14));
  for (double v : mats.C1.data()) CHECK(v == 0.0);
}

TEST_CASE("LMI matrix equals X'X + eps I independently rebuilt with Eigen") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(2, 16);
  const double gammas[] = {0.5, 1.0, 5.0};
  double worst = 0.0, worst_eig = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = dim(rng), q = dim(rng);
    const auto p = random_params(n, q, rng);
    const double gamma = gammas[trial % 3];
    const auto mats = assemble(p, gamma);
    const Eigen::MatrixXd A = to_eigen(mats.A), B1 = to_eigen(mats.B1), C1 = to_eigen(mats.C1);
    const Eigen::MatrixXd D = to_eigen(mats.D11), P = to_eigen(mats.P), L = to_eigen(mats.Lambda);
    Eigen::MatrixXd M(n + q, n + q);
    M.topLeftCorner(n, n) = -A.transpose() * P - P * A - 2.0 * gamma * P;
    M.topRightCorner(n, q) = -C1.transpose() * L - P * B1;
    M.bottomLeftCorner(q, n) = -L * C1 - B1.transpose() * P;
    M.bottomRightCorner(q, q) = 2.0 * L - L * D - D.transpose() * L;
    const Eigen::MatrixXd X = to_eigen(p.X);
    const Eigen::MatrixXd H = X.transpose() * X + p.eps * Eigen::MatrixXd::Identity(n + q, n + q);
    worst = std::max(worst, (M - H).cwiseAbs().maxCoeff() / std::max(1.0, H.cwiseAbs().maxCoeff()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()));
    worst_eig = std::min(worst_eig, eig.eigenvalues().minCoeff() - p.eps);
    CHECK(lmi_eig_min(mats) >= p.eps - 1e-9);
  }
  CHECK(worst <= 1e-10);
  CHECK(worst_eig >= -1e-9);
}

TEST_CASE("library LMI reconstruction matches its target") {
  std::mt19937_64 rng(12);
  const auto p = random_params(5, 3, rng);
  const auto M = lmi_matrix(assemble(p, 2.0));
  const auto H = lmi_target(p);
  REQUIRE(M.size() == H.size());
  for (std::size_t i = 0; i < M.size(); ++i) CHECK(M[i] == doctest::Approx(H[i]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("latent derivative trivial cases") {
  std::mt19937_64 rng(13);
  auto p = random_params(4, 3, rng);
  p.X = Tensor({7, 7});
  p.B1 = Tensor({4, 3});  // with X = 0 this forces C1 = 0
  const auto mats0 = assemble(p, 1.0);
  const Tensor z = Tensor::vector(random_vec(4, rng));
  const Tensor dz = latent_derivative(mats0, z);
  const Tensor Az = ad::matmul(mats0.A, z);
  for (std::size_t i = 0; i < 4; ++i) CHECK(dz[i] == doctest::Approx(Az[i]).epsilon(1e-14));

  const auto mats = assemble(random_params(4, 3, rng), 1.0);
  const Tensor zero = latent_derivative(mats, Tensor({4}));
  for (double v : zero.data()) CHECK(v == 0.0);
}

TEST_CASE("equilibrium solution has residual below 1e-10") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mats = assemble(random_params(6, 5, rng, 1.0), 1.0);
    const auto z = random_vec(6, rng);
    const Tensor w = equilibrium(mats.C1, mats.D11, Tensor::vector(z));
    CHECK(equilibrium_residual(mats, z, w.data()) <= 1e-10);
  }
}

TEST_CASE("equilibrium gradients match finite differences") {
  std::mt19937_64 rng(15);
  const auto mats = assemble(random_params(4, 3, rng), 1.0);
  const auto u = Tensor::vector(random_vec(3, rng));
  const Tensor z0 = Tensor::vector(random_vec(4, rng));
  CHECK(ad::grad_check([&](const Tensor& z) { return ad::dot(u, equilibrium(mats.C1, mats.D11, z)); }, z0, 1e-6) <=
        1e-6);
  CHECK(ad::grad_check([&](const Tensor& d) { return ad::dot(u, equilibrium(mats.C1, d, z0)); }, mats.D11, 1e-6) <=
        1e-5);
  CHECK(ad::grad_check([&](const Tensor& c) { return ad::dot(u, equilibrium(c, mats.D11, z0)); }, mats.C1, 1e-6) <=
        1e-5);
}

TEST_CASE("assembly gradients match finite differences") {
  std::mt19937_64 rng(16);
  const auto p = random_params(3, 2, rng);
  const auto z = Tensor::vector(random_vec(3, rng));
  const auto through = [&](auto field) {
    return [&, field](const Tensor& v) {
      RenParams q = p;
      q.*field = v;
      return ad::sum(ad::tanh(latent_derivative(assemble(q, 1.0), z)));
    };
  };
  CHECK(ad::grad_check(through(&RenParams::X), p.X, 1e-4) <= 1e-5);
  CHECK(ad::grad_check(through(&RenParams::X_P), p.X_P, 1e-4) <= 1e-5);
  // one lambda component has a gradient near 1e-7, so the step stays large
  CHECK(ad::grad_check(through(&RenParams::lambda_log), p.lambda_log, 1e-4) <= 1e-5);
  CHECK(ad::grad_check(through(&RenParams::S_A), p.S_A, 1e-4) <= 1e-5);
  CHECK(ad::grad_check(through(&RenParams::S_D), p.S_D, 1e-4) <= 1e-5);
  CHECK(ad::grad_check(through(&RenParams::B1), p.B1, 1e-4) <= 1e-5);
}

TEST_CASE("metric energy") {
  std::mt19937_64 rng(17);
  const auto mats = assemble(random_params(5, 2, rng), 1.0);
  CHECK(contraction_metric_energy(mats, std::vector<double>(5, 0.0)) == 0.0);
  const auto dz = random_vec(5, rng);
  double naive = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) naive += dz[i] * mats.P.at(i, j) * dz[j];
  CHECK(contraction_metric_energy(mats, dz) == doctest::Approx(naive).epsilon(1e-13));

  const auto id = assemble(zero_params(3, 1, 0.1, 1.0), 1.0);
  const std::vector<double> v = {1.0, -2.0, 0.5};
  CHECK(contraction_metric_energy(id, v) == doctest::Approx(5.25).epsilon(1e-15));
}

TEST_CASE("learnable rate map") {
  ContractionRateSpec spec;
  spec.mode = RateMode::learnable;
  spec.gamma_min = 0.5;
  const double raw = gamma_raw_for(spec, 2.0);
  CHECK(effective_gamma(spec, Tensor::scalar(raw)).item() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(effective_gamma(spec, Tensor::scalar(-5.0)).item() > 0.5);
  spec.mode = RateMode::fixed;
  spec.value = 3.0;
  CHECK(effective_gamma(spec, Tensor()).item() == 3.0);
}

TEST_CASE("invalid parameter shapes are rejected") {
  auto p = zero_params(2, 1, 0.1, 1.0);
  p.B1 = Tensor({1, 2});
  CHECK_THROWS_AS(p.validate(), ShapeError);
  auto e = zero_params(2, 1, -1.0, 1.0);
  CHECK_THROWS_AS(e.validate(), ValidationError);
}
