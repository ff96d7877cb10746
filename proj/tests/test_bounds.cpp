#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "renpol/bounds.hpp"
#include "renpol/loss.hpp"

using namespace renpol;
using namespace renpol::bounds;
using ad::Tensor;

namespace {

double series(double alpha, double R, double gamma, std::size_t H, std::size_t M) {
  double s = 0.0;
  for (std::size_t i = 0; i < H; ++i) s += std::exp(-2.0 * gamma * static_cast<double>(i) / static_cast<double>(H));
  return s / static_cast<double>(H) * alpha * alpha * R * R / static_cast<double>(M);
}

}  // namespace

TEST_CASE("region membership") {
  EllipseRegion one{{{0.5, -0.5}}, 0.0};
  const auto m = in_region(one, std::vector<double>{0.5, -0.5});
  CHECK(m.inside);
  CHECK(m.slack == 0.0);

  EllipseRegion seg{{{1.0, 0.0}, {-1.0, 0.0}}, 2.0};
  const auto s = in_region(seg, std::vector<double>{0.0, 0.0});
  CHECK(s.inside);
  CHECK(s.slack == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK_FALSE(in_region(seg, std::vector<double>{0.0, 0.1}).inside);

  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal(0.0, 1.0);
  EllipseRegion r;
  for (int i = 0; i < 4; ++i) r.foci.push_back({normal(rng), normal(rng), normal(rng)});
  r.R = 6.0;
  const std::vector<double> y = {normal(rng), normal(rng), normal(rng)};
  double sum = 0.0;
  for (const auto& f : r.foci) sum += std::hypot(y[0] - f[0], y[1] - f[1], y[2] - f[2]);
  CHECK(in_region(r, y).slack == doctest::Approx(sum - 6.0).epsilon(1e-13));
  CHECK(region_scale(r.foci, std::vector<std::vector<double>>{y}) == doctest::Approx(sum).epsilon(1e-13));
}

TEST_CASE("term two: canonical value, series form and limits") {
  CHECK(term_two(1, 1, 1, 10, 1) == doctest::Approx(0.47700).epsilon(2e-5));
  CHECK(std::abs(term_two(1, 1, 1, 10, 1) - series(1, 1, 1, 10, 1)) <= 1e-14);
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), R = u(rng), g = u(rng);
    const std::size_t H = 1 + static_cast<std::size_t>(u(rng) * 30), M = 1 + static_cast<std::size_t>(u(rng) * 3);
    CHECK(term_two(a, R, g, H, M) == doctest::Approx(series(a, R, g, H, M)).epsilon(1e-12));
  }
  CHECK(term_two(1.5, 2.0, 1e-14, 10, 3) == doctest::Approx(1.5 * 1.5 * 4.0 / 3.0).epsilon(1e-10));
  CHECK(term_two(1.5, 2.0, 1e6, 10, 3) == doctest::Approx(1.5 * 1.5 * 4.0 / 30.0).epsilon(1e-12));
  CHECK(term_two(1.0, 1.0, 1.0, 1, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("worst-case and true-loss bounds") {
  BoundInputs in;
  in.alpha = 1e-12;
  in.gamma = 1.0;
  in.H = 10;
  in.M = 2;
  in.R = 3.0;
  in.per_demo_mse = {0.0, 0.0};
  EllipseRegion reg{{{1.0, 0.0}, {-1.0, 0.0}}, 3.0};
  CHECK(worst_case_bound(std::vector<double>{0.2, 0.1}, reg, in, 1e-9) <= 1e-20);

  in.alpha = 1.3;
  in.M = 1;
  in.per_demo_mse = {0.25};
  EllipseRegion single{{{1.0, 0.0}}, 3.0};
  const double t2 = term_two(1.3, 3.0, 1.0, 10, 1);
  CHECK(worst_case_bound(std::vector<double>{0.0, 1.0}, single, in, 1e-9) == doctest::Approx(0.25 + t2).epsilon(1e-14));
  CHECK(true_loss_bound(in) == doctest::Approx(0.25 + t2).epsilon(1e-14));
  CHECK_THROWS_AS((void)worst_case_bound(std::vector<double>{10.0, 0.0}, single, in, 1e-9), ValidationError);

  // term (i) is a convex combination, so it never exceeds the largest MSE
  in.M = 3;
  in.per_demo_mse = {0.1, 0.4, 0.2};
  EllipseRegion three{{{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}}, 10.0};
  const double t3 = term_two(1.3, 10.0, 1.0, 10, 3);
  in.R = 10.0;
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> y = {box(rng), box(rng)};
    const double b = worst_case_bound(y, three, in, 1e-9);
    const auto lam = loss::lambda_weights(y, three.foci, 1e-9);
    CHECK(b == doctest::Approx(lam[0] * 0.1 + lam[1] * 0.4 + lam[2] * 0.2 + t3).epsilon(1e-13));
    CHECK(b <= true_loss_bound(in) + 1e-15);
  }
}

TEST_CASE("alpha estimate on isotropic linear decay is one") {
  ren::RenParams p;
  p.n = 2;
  p.q = 1;
  p.eps = 0.1;
  p.eps_P = 1.0;
  p.X = Tensor({3, 3});
  p.X_P = Tensor({2, 2});
  p.lambda_log = Tensor({1});
  p.S_A = Tensor({2, 2});
  p.S_D = Tensor({1, 1});
  p.B1 = Tensor({2, 1});
  CompiledPolicy c;
  c.mats = ren::assemble(p, 1.0);  // A = -1.05 I
  c.gamma = Tensor::scalar(1.05);
  c.mats.gamma = 1.05;
  c.proj = Tensor::identity(2);
  c.proj_pinv = Tensor::identity(2);
  rollout::SolverConfig cfg;
  cfg.horizon = 21;
  cfg.substeps = 5;
  std::mt19937_64 rng(54);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> inits(10, std::vector<double>(2));
  for (auto& v : inits)
    for (double& x : v) x = normal(rng);
  const auto est = estimate_alpha(c, inits, cfg);
  CHECK(est.alpha == doctest::Approx(1.0).epsilon(0.02));
  CHECK(est.alpha >= 1.0 - 1e-12);
  CHECK(est.pairs == 45);

  const std::vector<std::vector<double>> same = {{1.0, 1.0}, {1.0, 1.0}};
  CHECK_THROWS_AS((void)estimate_alpha(c, same, cfg), Error);
}

TEST_CASE("Lemma 1: squared smallest singular value bounds the Rayleigh quotient") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd P(3, 5);
    for (int i = 0; i < P.size(); ++i) P.data()[i] = normal(rng);
    // restrict to the row space, where P acts injectively
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff();
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd c(3);
      for (int i = 0; i < 3; ++i) c(i) = normal(rng);
      const Eigen::VectorXd v = svd.matrixV() * c;
      CHECK(smin * smin <= (P * v).squaredNorm() / v.squaredNorm() * (1 + 1e-12));
    }
    const Eigen::VectorXd vmin = svd.matrixV().col(2);
    CHECK((P * vmin).squaredNorm() == doctest::Approx(smin * smin).epsilon(1e-10));
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(3);
  CHECK((I * v).squaredNorm() / v.squaredNorm() == 1.0);
}

TEST_CASE("bound input validation") {
  BoundInputs in;
  in.per_demo_mse = {0.1, 0.2};
  in.M = 1;
  CHECK_THROWS_AS(in.validate(), ValidationError);
}
