#include "renpol/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "renpol/bijection.hpp"
#include "renpol/data.hpp"
#include "renpol/linalg.hpp"
#include "renpol/loss.hpp"
#include "renpol/policy.hpp"
#include "renpol/ren.hpp"
#include "renpol/train.hpp"

namespace renpol::verify {

namespace {

std::string describe(const std::string& what, double worst, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << what << " " << std::scientific << worst << " (tol " << tol << ")";
  return os.str();
}

SuiteResult fail_on_throw(const std::string& name, const std::function<SuiteResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

rollout::Trajectory random_path(std::size_t len, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  rollout::Trajectory t;
  t.horizon = len;
  t.dim = dim;
  t.dt = 1.0;
  t.states.resize(len * dim);
  for (double& v : t.states) v = normal(rng);
  return t;
}

}  // namespace

double dtw_brute_force(const rollout::Trajectory& a, const rollout::Trajectory& b) {
  const std::size_t n = a.horizon;
  const std::size_t m = b.horizon;
  auto cost = [&](std::size_t i, std::size_t j) {
    double c = 0.0;
    for (std::size_t k = 0; k < a.dim; ++k) c += (a.state(i)[k] - b.state(j)[k]) * (a.state(i)[k] - b.state(j)[k]);
    return c;
  };
  double best = INFINITY;
  // depth-first walk over every path from (0,0) to (n-1,m-1)
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += cost(i, j);
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

SuiteResult lmi_suite(const Options& options) {
  return fail_on_throw("lmi", [&] {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> dim(2, 16);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double gammas[] = {0.5, 1.0, 5.0};
    double worst_entry = 0.0;
    double worst_eig = INFINITY;
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = dim(rng);
      const std::size_t q = dim(rng);
      const auto params = ren::random_params(n, q, rng);
      auto mats = ren::assemble(params, gammas[trial % 3]);
      if (options.break_lmi) {
        auto A = mats.A.mutable_data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j) A[i * n + j] += 0.5 * std::abs(normal(rng)) + 0.1;
      }
      const auto target = ren::lmi_target(params);
      const auto M = ren::lmi_matrix(mats);
      for (std::size_t k = 0; k < M.size(); ++k) worst_entry = std::max(worst_entry, std::abs(M[k] - target[k]));
      worst_eig = std::min(worst_eig, ren::lmi_eig_min(mats) - params.eps);
    }
    const bool ok = worst_entry <= 1e-10 && worst_eig >= -1e-9;
    return SuiteResult{"lmi", ok,
                       describe("max |M - H|", worst_entry, 1e-10) + ", " +
                           describe("min eig(M) - eps", worst_eig, -1e-9)};
  });
}

SuiteResult bijection_suite(const Options& options) {
  return fail_on_throw("bijection", [&] {
    std::mt19937_64 rng(options.seed + 1);
    std::uniform_int_distribution<std::size_t> layers(0, 8);
    std::uniform_int_distribution<std::size_t> dims(2, 14);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t dim = dims(rng);
      const auto stack = flow::random_stack(layers(rng), dim, 16, rng);
      for (int s = 0; s < 10; ++s) {
        std::vector<double> y(dim);
        for (double& v : y) v = normal(rng);
        const auto x = ad::Tensor::vector(y);
        const auto fwd = flow::forward(stack, x);
        const auto back = flow::inverse(stack, fwd);
        const auto inv = flow::inverse(stack, x);
        const auto again = flow::forward(stack, inv);
        double nx = 0.0, e1 = 0.0, e2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          nx += y[k] * y[k];
          e1 += (back[k] - y[k]) * (back[k] - y[k]);
          e2 += (again[k] - y[k]) * (again[k] - y[k]);
        }
        worst = std::max(worst, std::sqrt(std::max(e1, e2) / nx));
      }
    }
    return SuiteResult{"bijection", worst <= 1e-9, describe("max round-trip relative error", worst, 1e-9)};
  });
}

SuiteResult contraction_suite(const Options& options) {
  return fail_on_throw("contraction", [&] {
    std::mt19937_64 rng(options.seed + 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    rollout::SolverConfig cfg;
    cfg.method = rollout::Method::rk4;
    cfg.horizon = 21;
    cfg.substeps = 50;  // dt = 1e-3
    double worst = 0.0;
    const double gammas[] = {0.5, 1.0, 2.0};
    for (int trial = 0; trial < 3; ++trial) {
      PolicyConfig pc;
      pc.state_dim = 2;
      pc.latent_dim = 6;
      pc.implicit_dim = 4;
      pc.coupling_layers = 2;
      pc.coupling_width = 8;
      pc.rate.value = gammas[trial];
      const auto compiled = compile(random_policy(pc, options.seed * 7919 + static_cast<std::uint64_t>(trial)));
      for (int pair = 0; pair < 3; ++pair) {
        std::vector<double> a(2), b(2);
        for (double& v : a) v = normal(rng);
        for (double& v : b) v = normal(rng);
        const auto ra = rollout::rollout_with_latent(compiled, a, cfg);
        const auto rb = rollout::rollout_with_latent(compiled, b, cfg);
        std::vector<double> dz(pc.latent_dim);
        auto energy = [&](std::size_t i) {
          for (std::size_t k = 0; k < dz.size(); ++k) dz[k] = ra.latent[i][k] - rb.latent[i][k];
          return ren::contraction_metric_energy(compiled.mats, dz);
        };
        const double v0 = energy(0);
        for (std::size_t i = 1; i < cfg.horizon; ++i) {
          const double t = cfg.sample_dt() * static_cast<double>(i);
          worst = std::max(worst, energy(i) / (std::exp(-2.0 * compiled.mats.gamma * t) * v0));
        }
      }
    }
    return SuiteResult{"contraction", worst <= 1.01, describe("max V(t) / (e^{-2 gamma t} V(0))", worst, 1.01)};
  });
}

SuiteResult gradient_suite(const Options& options) {
  return fail_on_throw("gradients", [&] {
    train::TrainConfig cfg;
    cfg.policy.state_dim = 2;
    cfg.policy.latent_dim = 3;
    cfg.policy.implicit_dim = 2;
    cfg.policy.coupling_layers = 2;
    cfg.policy.coupling_width = 4;
    cfg.solver.horizon = 5;
    cfg.metric.kind = loss::MetricKind::soft_dtw;
    cfg.metric.beta = 0.1;
    const auto raw = data::synthesize(data::CurveKind::sine, 2, 5, 2, 0.0, options.seed);
    const auto td = train::prepare(raw, cfg.solver.horizon);
    Policy policy = random_policy(cfg.policy, options.seed + 3);
    const auto g = train::loss_and_gradients(policy, td.demos, cfg, false);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < policy.params().size(); ++i) {
      auto values = policy.params()[i].value.mutable_data();
      for (std::size_t k = 0; k < values.size(); ++k) {
        const double keep = values[k];
        values[k] = keep + h;
        const double up = train::loss_and_gradients(policy, td.demos, cfg, false).loss;
        values[k] = keep - h;
        const double down = train::loss_and_gradients(policy, td.demos, cfg, false).loss;
        values[k] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = g.grads[i][k];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
      }
    }
    return SuiteResult{"gradients", worst <= 1e-4, describe("max relative error vs central differences", worst, 1e-4)};
  });
}

SuiteResult dtw_suite(const Options& options) {
  return fail_on_throw("dtw", [&] {
    std::mt19937_64 rng(options.seed + 4);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    double worst_gap = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_path(10, 2, rng);
      const auto b = random_path(10, 2, rng);
      const double hard = loss::dtw_classic(a, b);
      const double soft = loss::soft_dtw(a, b, 1e-3);
      worst_gap = std::max(worst_gap, std::abs(soft - hard) / hard);
    }
    double worst_brute = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
      const auto a = random_path(len(rng), 2, rng);
      const auto b = random_path(len(rng), 2, rng);
      worst_brute = std::max(worst_brute, std::abs(loss::dtw_classic(a, b) - dtw_brute_force(a, b)));
    }
    const bool ok = worst_gap <= 0.01 && worst_brute == 0.0;
    return SuiteResult{"dtw", ok,
                       describe("soft (beta 1e-3) vs classic gap", worst_gap, 0.01) + ", " +
                           describe("classic vs brute force", worst_brute, 0.0)};
  });
}

SuiteResult lemma_suite(const Options& options) {
  return fail_on_throw("lemmas", [&] {
    std::mt19937_64 rng(options.seed + 5);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> dims(1, 6);
    std::uniform_real_distribution<double> positive(1e-3, 10.0);
    bool ok = true;
    double worst_l1 = 0.0;
    double worst_eq = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t m = dims(rng);
      const std::size_t n = dims(rng);
      std::vector<double> P(m * n), v(n), PtP(n * n, 0.0);
      for (double& x : P) x = normal(rng);
      for (double& x : v) x = normal(rng);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t r = 0; r < m; ++r) PtP[i * n + j] += P[r * n + i] * P[r * n + j];
      const auto eig = linalg::sym_eig(PtP, n);
      const double sigma_min_sq = std::max(0.0, eig.values[0]);
      auto rayleigh = [&](const std::vector<double>& x) {
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < n; ++c) s += P[r * n + c] * x[c];
          num += s * s;
        }
        for (double xi : x) den += xi * xi;
        return num / den;
      };
      worst_l1 = std::max(worst_l1, sigma_min_sq - rayleigh(v));
      std::vector<double> u(n);
      for (std::size_t k = 0; k < n; ++k) u[k] = eig.vectors[k * n + 0];
      worst_eq = std::max(worst_eq, std::abs(rayleigh(u) - sigma_min_sq));
    }
    ok = ok && worst_l1 <= 1e-12 && worst_eq <= 1e-10;

    double worst_l2 = -INFINITY;
    double worst_const = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t M = dims(rng) + 1;
      double sum = 0.0, inv = 0.0;
      for (std::size_t k = 0; k < M; ++k) {
        const double x = positive(rng);
        sum += x;
        inv += 1.0 / x;
      }
      const double Md = static_cast<double>(M);
      worst_l2 = std::max(worst_l2, (Md / inv - sum / Md) / (sum / Md));
      const double c = positive(rng);
      double csum = 0.0, cinv = 0.0;
      for (std::size_t k = 0; k < M; ++k) {
        csum += c;
        cinv += 1.0 / c;
      }
      worst_const = std::max(worst_const, std::abs(Md / cinv - csum / Md) / c);
    }
    ok = ok && worst_l2 <= 1e-12 && worst_const <= 1e-13;
    return SuiteResult{"lemmas", ok,
                       describe("Lemma-1 excess", worst_l1, 1e-12) + ", " +
                           describe("equality gap", worst_eq, 1e-10) + ", " +
                           describe("harmonic-mean excess", worst_l2, 1e-12)};
  });
}

std::vector<SuiteResult> run_all(const Options& options) {
  return {lmi_suite(options),      bijection_suite(options), contraction_suite(options),
          gradient_suite(options), dtw_suite(options),       lemma_suite(options)};
}

}  // namespace renpol::verify
