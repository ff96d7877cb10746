// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "renpol/bijection.hpp"
#include "renpol/bounds.hpp"
#include "renpol/cli.hpp"
#include "renpol/data.hpp"
#include "renpol/loss.hpp"
#include "renpol/ren.hpp"
#include "renpol/train.hpp"
#include "renpol/verify.hpp"

using namespace renpol;
using Clock = std::chrono::steady_clock;
using Mat = Eigen::MatrixXd;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

Mat to_eigen(const ad::Tensor& t) {
  Mat m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t.at(i, j);
  return m;
}

// Run the check; an exception is a failure with the message attached.
void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what());
  }
}

// 1. reconstructed LMI matrix equals X'X + eps I; eigenvalues via Eigen.
void construction_soundness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dim(2, 16);
  const double gammas[] = {0.5, 1.0, 5.0};
  double worst_entry = 0.0, worst_eig = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = dim(rng), q = dim(rng);
    const auto params = ren::random_params(n, q, rng);
    const double gamma = gammas[k % 3];
    const auto mats = ren::assemble(params, gamma);
    const Mat A = to_eigen(mats.A), B = to_eigen(mats.B1), C = to_eigen(mats.C1), D = to_eigen(mats.D11);
    const Mat P = to_eigen(mats.P), L = to_eigen(mats.Lambda), X = to_eigen(params.X);
    Mat M(n + q, n + q);
    M.topLeftCorner(n, n) = -A.transpose() * P - P * A - 2.0 * gamma * P;
    M.topRightCorner(n, q) = -C.transpose() * L - P * B;
    M.bottomLeftCorner(q, n) = -L * C - B.transpose() * P;
    M.bottomRightCorner(q, q) = 2.0 * L - L * D - D.transpose() * L;
    const Mat H = X.transpose() * X + params.eps * Mat::Identity(n + q, n + q);
    worst_entry = std::max(worst_entry, (M - H).cwiseAbs().maxCoeff());
    const Mat Ms = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Ms);
    worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff() - params.eps);
  }
  const double secs = seconds_since(t0);
  report(1, worst_entry <= 1e-10 && worst_eig >= -1e-9 && secs < 10.0,
         fmt("100 draws: max|M-H| %.2e (<=1e-10), min eig(M)-eps %.2e (>=-1e-9), %.2f s (<10)", worst_entry,
             worst_eig, secs));
}

// 2. latent metric energy envelope and state-space decay rate.
double ls_slope(const std::vector<double>& ts, const std::vector<double>& ys) {
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= static_cast<double>(ts.size());
  my /= static_cast<double>(ts.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - mt) * (ys[i] - my);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  return num / den;
}

void contraction_envelope() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> nz(3, 8), nv(2, 6), layers(0, 4);
  const double gammas[] = {0.5, 1.0, 2.0, 5.0};
  rollout::SolverConfig cfg;
  cfg.method = rollout::Method::rk4;
  cfg.horizon = 41;
  cfg.substeps = 25;  // dt = 1e-3
  double worst_ratio = 0.0;
  double worst_slope = -INFINITY;   // state-space slope / gamma, must stay <= -0.9
  double worst_metric = -INFINITY;  // latent P-metric slope / gamma, <= -1 by construction
  std::size_t slow_pairs = 0;
  for (int p = 0; p < 20; ++p) {
    PolicyConfig pc;
    pc.state_dim = 2;
    pc.latent_dim = nz(rng);
    pc.implicit_dim = nv(rng);
    pc.coupling_layers = layers(rng);
    pc.coupling_width = 8;
    pc.rate.value = gammas[p % 4];
    const auto compiled = compile(random_policy(pc, 5000 + static_cast<std::uint64_t>(p)));
    const double gamma = compiled.mats.gamma;
    for (int pair = 0; pair < 20; ++pair) {
      std::vector<double> a(2), b(2);
      for (double& v : a) v = 0.8 * normal(rng);
      for (double& v : b) v = 0.8 * normal(rng);
      const auto ra = rollout::rollout_with_latent(compiled, a, cfg);
      const auto rb = rollout::rollout_with_latent(compiled, b, cfg);
      std::vector<double> dz(pc.latent_dim);
      const auto energy = [&](std::size_t i) {
        for (std::size_t k = 0; k < dz.size(); ++k) dz[k] = ra.latent[i][k] - rb.latent[i][k];
        return ren::contraction_metric_energy(compiled.mats, dz);
      };
      const double v0 = energy(0);
      std::vector<double> ts, log_state, log_metric;
      for (std::size_t i = 0; i < cfg.horizon; ++i) {
        const double t = cfg.sample_dt() * static_cast<double>(i);
        const double v = energy(i);
        if (i > 0) worst_ratio = std::max(worst_ratio, v / (std::exp(-2.0 * gamma * t) * v0));
        if (2 * i >= cfg.horizon - 1) {
          double d = 0.0;
          for (std::size_t k = 0; k < 2; ++k)
            d += (ra.states.state(i)[k] - rb.states.state(i)[k]) * (ra.states.state(i)[k] - rb.states.state(i)[k]);
          ts.push_back(t);
          log_state.push_back(0.5 * std::log(d));
          log_metric.push_back(0.5 * std::log(v));
        }
      }
      const double slope = ls_slope(ts, log_state) / gamma;
      if (slope > -0.9) ++slow_pairs;
      worst_slope = std::max(worst_slope, slope);
      worst_metric = std::max(worst_metric, ls_slope(ts, log_metric) / gamma);
    }
  }
  const double secs = seconds_since(t0);
  report(2, worst_ratio <= 1.01 && worst_slope <= -0.9 && secs < 60.0,
         fmt("400 pairs: max V(t)/(e^{-2gt}V(0)) %.4f (<=1.01); state-space slope/gamma max %.3f (<=-0.9), ",
             worst_ratio, worst_slope) +
             fmt("%.0f pairs above; latent metric slope/gamma max %.3f; %.1f s (<60)", static_cast<double>(slow_pairs),
                 worst_metric, secs));
}

// 3. bijection round trips.
void bijection_round_trip() {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> layers(0, 8), dims(2, 14);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const std::size_t dim = dims(rng);
    const auto stack = flow::random_stack(layers(rng), dim, 32, rng);
    std::vector<double> y(dim);
    for (double& v : y) v = normal(rng);
    const auto x = ad::Tensor::vector(y);
    const auto fb = flow::inverse(stack, flow::forward(stack, x));
    const auto bf = flow::forward(stack, flow::inverse(stack, x));
    double n2 = 0.0, e1 = 0.0, e2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      n2 += y[k] * y[k];
      e1 += (fb[k] - y[k]) * (fb[k] - y[k]);
      e2 += (bf[k] - y[k]) * (bf[k] - y[k]);
    }
    worst = std::max(worst, std::sqrt(std::max(e1, e2) / n2));
  }
  report(3, worst <= 1e-9, fmt("1000 points, K in 0..8, N_y in 2..14: max relative round-trip error %.2e (<=1e-9)", worst));
}

// 4. full soft-DTW training loss gradient vs central differences.
void gradient_correctness() {
  train::TrainConfig cfg;
  cfg.policy.state_dim = 2;
  cfg.policy.latent_dim = 3;
  cfg.policy.implicit_dim = 2;
  cfg.policy.coupling_layers = 2;
  cfg.policy.coupling_width = 8;
  cfg.solver.horizon = 5;
  cfg.metric = {loss::MetricKind::soft_dtw, 0.1};
  const auto raw = data::synthesize(data::CurveKind::sine, 2, 20, 2, 0.02, 404);
  const auto td = train::prepare(raw, cfg.solver.horizon);
  Policy policy = random_policy(cfg.policy, 404);
  const auto g = train::loss_and_gradients(policy, td.demos, cfg, false);
  const double h = 1e-6;
  double worst = 0.0;
  std::size_t count = 0;
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
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-8));
      ++count;
    }
  }
  report(4, worst <= 1e-4,
         fmt("%.0f parameters: max |analytic - central| / max(|analytic|, 1e-8) = %.2e (<=1e-4)",
             static_cast<double>(count), worst));
}

rollout::Trajectory random_path(std::size_t len, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  rollout::Trajectory t;
  t.horizon = len;
  t.dim = 2;
  t.dt = 1.0;
  t.states.resize(2 * len);
  for (double& v : t.states) v = normal(rng);
  return t;
}

// 5. soft-DTW near the hard limit; classic DTW vs exhaustive alignments.
void soft_dtw_oracle() {
  std::mt19937_64 rng(505);
  double worst_gap = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto a = random_path(10, rng), b = random_path(10, rng);
    const double hard = loss::dtw_classic(a, b);
    worst_gap = std::max(worst_gap, std::abs(loss::soft_dtw(a, b, 1e-3) - hard) / hard);
  }
  std::size_t mismatches = 0, pairs = 0;
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t m = 1; m <= 6; ++m)
      for (int rep = 0; rep < 3; ++rep) {
        const auto a = random_path(n, rng), b = random_path(m, rng);
        if (loss::dtw_classic(a, b) != verify::dtw_brute_force(a, b)) ++mismatches;
        ++pairs;
      }
  report(5, worst_gap <= 0.01 && mismatches == 0,
         fmt("50 pairs: max relative gap %.2e (<=1e-2); brute force on %.0f pairs up to 6x6: %.0f mismatches", worst_gap,
             static_cast<double>(pairs), static_cast<double>(mismatches)));
}

train::TrainConfig sine_config(std::uint64_t seed) {
  train::TrainConfig cfg;
  cfg.seed = seed;
  cfg.solver.horizon = 30;
  cfg.epochs = 600;
  cfg.log_every = 0;
  return cfg;
}

data::Dataset sine_dataset() { return data::synthesize(data::CurveKind::sine, 3, 100, 2, 0.0, 7); }

double in_sample_mse(const train::Checkpoint& ck, const data::Dataset& raw) {
  const auto td = train::prepare(raw, ck.norm, ck.config.solver.horizon);
  return loss::empirical_loss(compile(ck.policy), td.dataset.trajectories(), ck.config.solver, loss::Metric{});
}

// 6. desk-scale training on the synthetic sine dataset.
train::Checkpoint desk_scale_training() {
  const auto raw = sine_dataset();
  std::vector<double> mses;
  std::vector<train::Checkpoint> trained;
  const auto t0 = Clock::now();
  for (std::uint64_t seed : {0, 1, 2}) {
    trained.push_back(train::train(sine_config(seed), raw));
    mses.push_back(in_sample_mse(trained.back(), raw));
  }
  const double secs = seconds_since(t0);
  std::vector<double> sorted = mses;
  std::sort(sorted.begin(), sorted.end());
  report(6, sorted[1] <= 0.05 && secs <= 600.0,
         fmt("sine M=3 H=30, 600 epochs x 3 seeds: in-sample MSE %.2e %.2e %.2e, median %.2e (<=0.05)", mses[0],
             mses[1], mses[2], sorted[1]) +
             fmt(", %.0f s total (<=600 per seed)", secs));
  return trained[0];
}

// 7. certificates hold on the trained policy.
void bound_soundness(const train::Checkpoint& ck) {
  const auto raw = sine_dataset();
  const auto td = train::prepare(raw, ck.norm, ck.config.solver.horizon);
  const auto compiled = compile(ck.policy);
  const auto& cfg = ck.config.solver;
  const auto demos = td.dataset.trajectories();
  const auto foci = td.dataset.initial_states();

  bounds::BoundInputs in;
  in.gamma = compiled.mats.gamma;
  in.H = cfg.horizon;
  in.M = demos.size();
  const auto in_rolls = rollout::rollout_batch(compiled, foci, cfg);
  for (std::size_t m = 0; m < in.M; ++m) in.per_demo_mse.push_back(loss::mse(in_rolls[m], demos[m]));

  data::SamplerSpec spec{data::SamplerMode::hypersphere, 0.1, 77, 100};
  const auto sampled = data::sample_oos_inits(td.dataset, spec);
  const auto rolls = rollout::rollout_batch(compiled, sampled, cfg);
  const bounds::EllipseRegion region{foci, bounds::region_scale(foci, sampled)};
  in.R = region.R;

  auto pool = rolls;
  pool.insert(pool.end(), in_rolls.begin(), in_rolls.end());
  in.alpha = bounds::kAlphaSafety * bounds::estimate_alpha(pool, in.gamma).alpha;

  const auto count_violations = [&](std::vector<double>& observed) {
    std::size_t v = 0;
    observed.clear();
    for (std::size_t s = 0; s < sampled.size(); ++s) {
      observed.push_back(loss::weighted_loss(rolls[s], demos, loss::Metric{}, ck.config.eps_dist));
      if (observed.back() > bounds::worst_case_bound(sampled[s], region, in, ck.config.eps_dist)) ++v;
    }
    return v;
  };
  std::vector<double> observed;
  std::size_t violations = count_violations(observed);
  if (violations > 0) {
    data::SamplerSpec more = spec;
    more.seed = 78;
    more.count = 400;
    const auto extra = rollout::rollout_batch(compiled, data::sample_oos_inits(td.dataset, more), cfg);
    pool.insert(pool.end(), extra.begin(), extra.end());
    in.alpha = bounds::kAlphaSafety * bounds::estimate_alpha(pool, in.gamma).alpha;
    violations = count_violations(observed);
  }
  double mean = 0.0;
  for (double v : observed) mean += v;
  mean /= static_cast<double>(observed.size());
  const double corollary = bounds::true_loss_bound(in);
  report(7, violations == 0 && mean < corollary,
         fmt("100 OOS states: %.0f bound violations; observed mean %.3e < expected-loss bound %.3e (alpha %.3f)",
             static_cast<double>(violations), mean, corollary, in.alpha));
}

// 8. closed-form uncertainty term.
void term_two_calculator() {
  const double v = bounds::term_two(1.0, 1.0, 1.0, 10, 1);
  double series = 0.0;
  for (int i = 0; i < 10; ++i) series += std::exp(-0.2 * i);
  series /= 10.0;
  const double small = bounds::term_two(1.5, 2.0, 1e-10, 10, 3);  // -> a^2 R^2 / M = 3
  const double large = bounds::term_two(1.5, 2.0, 1e4, 10, 3);    // -> a^2 R^2 / (H M) = 0.3
  const bool ok = std::abs(v - 0.47700) <= 1e-5 && std::abs(v - series) <= 1e-12 && std::abs(small - 3.0) <= 1e-8 &&
                  std::abs(large - 0.3) <= 1e-12;
  report(8, ok,
         fmt("term_two(1,1,1,10,1) = %.6f (0.47700 +- 1e-5); gamma->0: %.9f (3); gamma->inf: %.9f (0.3)", v, small,
             large));
}

// 9. inverse-distance weights and the harmonic/arithmetic mean inequality.
void weight_machinery() {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> positive(1e-3, 10.0);
  double worst_sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::vector<std::vector<double>> inits(1 + k % 7, std::vector<double>(2));
    for (auto& y : inits)
      for (double& v : y) v = normal(rng);
    const std::vector<double> y0{normal(rng), normal(rng)};
    const auto w = loss::lambda_weights(y0, inits, 1e-9);
    double s = 0.0;
    for (double x : w) s += x;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  const std::vector<std::vector<double>> pair{{1.0, 0.0}, {-1.0, 0.0}};
  const auto sym = loss::lambda_weights(std::vector<double>{0.0, 0.7}, pair, 1e-9);
  const std::vector<std::vector<double>> foci{{0.3, -0.4}, {1.2, 0.9}, {-0.8, 0.5}};
  const auto dom = loss::lambda_weights(foci[0], foci, 1e-12);

  bool lemma_ok = true;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t M = 1 + static_cast<std::size_t>(k % 10);
    double sum = 0.0, inv = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double x = positive(rng);
      sum += x;
      inv += 1.0 / x;
    }
    const double Md = static_cast<double>(M);
    if (Md / inv > sum / Md * (1.0 + 1e-14)) lemma_ok = false;
    const double c = positive(rng);
    double csum = 0.0, cinv = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      csum += c;
      cinv += 1.0 / c;
    }
    if (std::abs(Md / cinv - csum / Md) > 1e-13 * c) lemma_ok = false;
  }
  const bool ok = worst_sum <= 1e-12 && sym[0] == sym[1] && dom[0] >= 1.0 - 1e-11 && lemma_ok;
  report(9, ok,
         fmt("max |sum-1| %.1e; equidistant (%.3f, %.3f); exact-match weight 1-%.1e; ", worst_sum, sym[0], sym[1],
             1.0 - dom[0]) +
             (lemma_ok ? "harmonic <= arithmetic mean on 1000 vectors, equality at constants"
                       : "harmonic/arithmetic mean inequality violated"));
}

std::string run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"renpol"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw Error("cli exited " + std::to_string(code) + ": " + err.str());
  return out.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// 10. identical inputs give identical artifacts.
void determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "renpol_acceptance";
  std::filesystem::create_directories(dir);
  const std::string data = (dir / "sine.csv").string();
  run_cli({"gen-data", "--kind", "sine", "--M", "3", "--H", "60", "--seed", "3", "--out", data});
  std::string ck[2], report_text[2];
  for (int r = 0; r < 2; ++r) {
    const std::string path = (dir / ("run" + std::to_string(r) + ".ckpt")).string();
    run_cli({"train", "--data", data, "--out", path, "--seed", "11", "--epochs", "40", "--log",
             (dir / "log.jsonl").string()});
    ck[r] = slurp(path);
    report_text[r] = run_cli({"eval", "--ckpt", path, "--data", data, "--samples", "30", "--seed", "5"});
  }
  const auto loaded = train::load(dir / "run0.ckpt");
  const auto reloaded = train::deserialize(train::serialize(loaded));
  const std::vector<double> y0{-0.4, 0.7};
  const auto a = rollout::rollout(compile(loaded.policy), y0, loaded.config.solver);
  const auto b = rollout::rollout(compile(reloaded.policy), y0, reloaded.config.solver);
  double gap = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) gap = std::max(gap, std::abs(a.states[k] - b.states[k]));
  const bool ok = ck[0] == ck[1] && report_text[0] == report_text[1] && train::serialize(reloaded) == ck[0] &&
                  gap <= 1e-12;
  report(10, ok,
         std::string("checkpoints ") + (ck[0] == ck[1] ? "identical" : "DIFFER") + ", eval reports " +
             (report_text[0] == report_text[1] ? "identical" : "DIFFER") + ", save/load/save " +
             (train::serialize(reloaded) == ck[0] ? "identical" : "DIFFERS") + fmt(", reloaded rollout gap %.1e (<=1e-12)", gap));
  std::filesystem::remove_all(dir);
}

// 11. learned contraction rate grows while the fit stays good.
void learnable_rate() {
  const auto raw = sine_dataset();
  auto cfg = sine_config(0);
  cfg.policy.rate.mode = ren::RateMode::learnable;
  cfg.rate_learning = {0.1, 0.0, 0.0};
  const auto start = train::start(cfg, raw);
  const double gamma_init = compile(start.policy).mats.gamma;
  auto ck = start;
  train::resume(ck, raw);
  const double gamma_end = compile(ck.policy).mats.gamma;
  const double mse = in_sample_mse(ck, raw);
  report(11, gamma_end > gamma_init && mse <= 0.05,
         fmt("mu=0.1 c=0 gamma0=0: gamma %.3f -> %.3f, in-sample MSE %.2e (<=0.05)", gamma_init, gamma_end, mse));
}

}  // namespace

int main() {
  guarded(1, construction_soundness);
  guarded(2, contraction_envelope);
  guarded(3, bijection_round_trip);
  guarded(4, gradient_correctness);
  guarded(5, soft_dtw_oracle);
  train::Checkpoint trained;
  bool have_trained = false;
  guarded(6, [&] {
    trained = desk_scale_training();
    have_trained = true;
  });
  if (have_trained) guarded(7, [&] { bound_soundness(trained); });
  else report(7, false, "no trained policy (criterion 6 threw)");
  guarded(8, term_two_calculator);
  guarded(9, weight_machinery);
  guarded(10, determinism);
  guarded(11, learnable_rate);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
