#include "renpol/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "renpol/bounds.hpp"
#include "renpol/data.hpp"
#include "renpol/loss.hpp"
#include "renpol/train.hpp"
#include "renpol/verify.hpp"

namespace renpol::cli {

namespace {

using rollout::Trajectory;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("write failed for " + path);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6e", v);
  return buf;
}

std::vector<double> parse_state(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string tok = text.substr(pos, comma - pos);
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    double v = 0.0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || r.ec != std::errc() || r.ptr != tok.data() + tok.size() || !std::isfinite(v))
      throw ValidationError("--y0: '" + text + "' is not a comma-separated list of numbers");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

Trajectory to_raw(const Trajectory& t, const data::NormalizationSpec& norm) {
  Trajectory out = t;
  for (std::size_t i = 0; i < t.horizon; ++i) {
    const auto v = norm.invert(t.state(i));
    std::copy(v.begin(), v.end(), out.state(i).begin());
  }
  return out;
}

data::SamplerMode parse_sampler(const std::string& s) {
  if (s == "hypersphere") return data::SamplerMode::hypersphere;
  if (s == "region") return data::SamplerMode::region_uniform;
  throw ValidationError("--sampler must be hypersphere or region");
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

// Population statistics, accumulated in index order.
Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

// ---- gen-data ------------------------------------------------------------------

struct GenDataArgs {
  std::string kind = "sine";
  std::size_t M = 3;
  std::size_t H = 100;
  std::size_t dim = 2;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  if (a.M < 1 || a.H < 2 || a.dim < 1 || !(a.noise >= 0.0))
    throw ValidationError("gen-data: need M >= 1, H >= 2, dim >= 1, noise >= 0");
  const auto ds = data::synthesize(data::parse_curve_kind(a.kind), a.M, a.H, a.dim, a.noise, a.seed);
  data::save_csv(ds, a.out);
  out << "wrote " << a.out << ": " << ds.size() << " demos x " << a.H << " states, dim " << ds.dim << "\n";
  return 0;
}

// ---- train -------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string log;
  bool learn_gamma = false;
  bool serial = false;
  std::map<std::string, std::string> overrides;  // config key -> flag text
  std::map<std::string, CLI::Option*> given;
};

int train_cmd(const TrainArgs& a, std::ostream& out) {
  std::map<std::string, std::string> kv;
  if (!a.config.empty()) kv = train::parse_key_values(read_file(a.config));
  for (const auto& [key, opt] : a.given)
    if (opt->count() > 0) kv[key] = a.overrides.at(key);
  if (a.learn_gamma) kv["gamma_mode"] = "learnable";

  train::TrainConfig cfg;
  apply_key_values(cfg, kv);
  cfg.parallel = !a.serial;
  const auto raw = data::load_csv(a.data);

  std::ofstream log_file;
  train::TrainOptions options;
  if (!a.log.empty()) {
    log_file.open(a.log, std::ios::binary);
    if (!log_file) throw Error("cannot write " + a.log);
    options.log = &log_file;
  } else {
    options.log = &out;
  }
  options.checkpoint_path = a.out;
  const auto ck = train::train(cfg, raw, options);

  const auto td = train::prepare(raw, ck.norm, ck.config.solver.horizon);
  const auto compiled = compile(ck.policy);
  loss::Metric mse;
  const double in_sample = loss::empirical_loss(compiled, td.dataset.trajectories(), ck.config.solver, mse);
  out << "trained " << ck.summary.epochs_done << " epochs: objective " << sci(ck.summary.last_loss)
      << ", in-sample mse " << sci(in_sample) << ", gamma " << sci(compiled.mats.gamma) << ", eig_min "
      << sci(ren::lmi_eig_min(compiled.mats)) << "\n";
  out << "checkpoint " << a.out << "\n";
  return 0;
}

// ---- rollout -------------------------------------------------------------------------

struct RolloutArgs {
  std::string ckpt;
  std::vector<std::string> y0;
  std::string from_data;
  std::string out;
};

int rollout_cmd(const RolloutArgs& a, std::ostream& out) {
  if (a.y0.empty() == a.from_data.empty()) throw ValidationError("rollout: give either --y0 or --from-data");
  const auto ck = train::load(a.ckpt);
  const std::size_t dim = ck.config.policy.state_dim;
  std::vector<std::vector<double>> inits;
  if (!a.from_data.empty()) {
    const auto ds = data::load_csv(a.from_data);
    if (ds.dim != dim)
      throw ValidationError("dataset dimension " + std::to_string(ds.dim) + " does not match the model's " +
                            std::to_string(dim));
    inits = ds.initial_states();
  } else {
    for (const auto& s : a.y0) {
      auto y = parse_state(s);
      if (y.size() != dim)
        throw ValidationError("--y0 '" + s + "' has " + std::to_string(y.size()) + " entries, the model expects " +
                              std::to_string(dim));
      inits.push_back(std::move(y));
    }
  }
  for (auto& y : inits) y = ck.norm.apply(y);
  const auto compiled = compile(ck.policy);
  auto rolls = rollout::rollout_batch(compiled, inits, ck.config.solver);
  for (auto& r : rolls) r = to_raw(r, ck.norm);
  const std::string csv = data::trajectories_csv(rolls);
  if (a.out.empty()) {
    out << csv;
  } else {
    write_file(a.out, csv);
    out << "wrote " << rolls.size() << " rollouts to " << a.out << "\n";
  }
  return 0;
}

// ---- eval -----------------------------------------------------------------------------

struct EvalArgs {
  std::string ckpt;
  std::string data;
  double radius_scale = 0.1;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  std::string sampler = "hypersphere";
  double beta = 0.1;
  std::string traj_out;
};

struct SetReport {
  std::vector<double> mse, sdtw, sdtw_raw;
};

void print_row(std::ostream& out, const std::string& name, const SetReport& r) {
  const auto a = stats(r.mse), b = stats(r.sdtw), c = stats(r.sdtw_raw);
  out << name << "  n=" << r.mse.size() << "  mse " << sci(a.mean) << " +- " << sci(a.std) << "  soft-dtw "
      << sci(b.mean) << " +- " << sci(b.std) << "  soft-dtw(raw) " << sci(c.mean) << " +- " << sci(c.std) << "\n";
}

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  if (a.samples < 1) throw ValidationError("eval: --samples must be >= 1");
  const auto ck = train::load(a.ckpt);
  const auto raw = data::load_csv(a.data);
  const auto td = train::prepare(raw, ck.norm, ck.config.solver.horizon);
  const auto compiled = compile(ck.policy);
  const auto& cfg = ck.config.solver;
  const auto demos = td.dataset.trajectories();
  std::vector<Trajectory> demos_raw;
  for (const auto& d : demos) demos_raw.push_back(to_raw(d, ck.norm));
  loss::Metric mse;
  loss::Metric sdtw{loss::MetricKind::soft_dtw, a.beta};
  sdtw.validate();

  const auto inits = td.dataset.initial_states();
  const auto in_rolls = rollout::rollout_batch(compiled, inits, cfg);
  SetReport in;
  for (std::size_t m = 0; m < demos.size(); ++m) {
    in.mse.push_back(loss::discrepancy(in_rolls[m], demos[m], mse));
    in.sdtw.push_back(loss::discrepancy(in_rolls[m], demos[m], sdtw));
    in.sdtw_raw.push_back(loss::discrepancy(to_raw(in_rolls[m], ck.norm), demos_raw[m], sdtw));
  }

  data::SamplerSpec spec{parse_sampler(a.sampler), a.radius_scale, a.seed, a.samples};
  const std::size_t per_demo = (a.samples + demos.size() - 1) / demos.size();
  std::vector<std::size_t> chosen;
  const auto oos_inits = data::sample_oos_inits_per_demo(td.dataset, spec, per_demo, chosen);
  const auto oos_rolls = rollout::rollout_batch(compiled, oos_inits, cfg);
  SetReport oos;
  for (std::size_t s = 0; s < oos_rolls.size(); ++s) {
    oos.mse.push_back(loss::weighted_loss(oos_rolls[s], demos, mse, ck.config.eps_dist));
    oos.sdtw.push_back(loss::weighted_loss(oos_rolls[s], demos, sdtw, ck.config.eps_dist));
    oos.sdtw_raw.push_back(loss::weighted_loss(to_raw(oos_rolls[s], ck.norm), demos_raw, sdtw, ck.config.eps_dist));
  }

  out << "dataset " << td.dataset.name << ": " << demos.size() << " demos, horizon " << cfg.horizon
      << ", losses in normalized units unless marked raw\n";
  out << "oos sampler " << a.sampler << ", radius scale " << a.radius_scale << ", " << per_demo
      << " draws per demo, seed " << a.seed << "\n";
  print_row(out, "in-sample", in);
  print_row(out, "oos", oos);

  if (!a.traj_out.empty()) {
    std::vector<Trajectory> in_raw, oos_raw;
    for (const auto& r : in_rolls) in_raw.push_back(to_raw(r, ck.norm));
    for (const auto& r : oos_rolls) oos_raw.push_back(to_raw(r, ck.norm));
    write_file(a.traj_out + "_in.csv", data::trajectories_csv(in_raw));
    write_file(a.traj_out + "_oos.csv", data::trajectories_csv(oos_raw));
    out << "trajectories " << a.traj_out << "_in.csv " << a.traj_out << "_oos.csv\n";
  }
  return 0;
}

// ---- bound ----------------------------------------------------------------------------

struct BoundArgs {
  std::string ckpt;
  std::string data;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  double radius_scale = 0.1;
  std::string sampler = "hypersphere";
  double alpha = 0.0, R = 0.0, gamma = 0.0;
  std::size_t H = 0, M = 0;
  std::vector<CLI::Option*> calculator;
};

int bound_calculator(const BoundArgs& a, std::ostream& out) {
  for (const auto* opt : a.calculator)
    if (opt->count() == 0)
      throw ValidationError("bound: calculator mode needs all of --alpha --R --gamma --H --M");
  if (!(a.alpha >= 0.0) || !(a.R >= 0.0) || !(a.gamma > 0.0) || a.H < 1 || a.M < 1)
    throw ValidationError("bound: need alpha >= 0, R >= 0, gamma > 0, H >= 1, M >= 1");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", bounds::term_two(a.alpha, a.R, a.gamma, a.H, a.M));
  out << "term_two " << buf << "  (alpha " << a.alpha << ", R " << a.R << ", gamma " << a.gamma << ", H " << a.H
      << ", M " << a.M << ")\n";
  return 0;
}

int bound_cmd(const BoundArgs& a, std::ostream& out) {
  const bool calculator = std::any_of(a.calculator.begin(), a.calculator.end(), [](auto* o) { return o->count() > 0; });
  if (calculator) return bound_calculator(a, out);
  if (a.ckpt.empty() || a.data.empty()) throw ValidationError("bound: --ckpt and --data are required");
  if (a.samples < 2) throw ValidationError("bound: --samples must be >= 2");
  const auto ck = train::load(a.ckpt);
  const auto raw = data::load_csv(a.data);
  const auto td = train::prepare(raw, ck.norm, ck.config.solver.horizon);
  const auto compiled = compile(ck.policy);
  const auto& cfg = ck.config.solver;
  const auto demos = td.dataset.trajectories();
  const auto foci = td.dataset.initial_states();
  const loss::Metric mse;

  bounds::BoundInputs in;
  in.gamma = compiled.mats.gamma;
  in.H = cfg.horizon;
  in.M = demos.size();
  const auto in_rolls = rollout::rollout_batch(compiled, foci, cfg);
  for (std::size_t m = 0; m < demos.size(); ++m) in.per_demo_mse.push_back(loss::mse(in_rolls[m], demos[m]));

  data::SamplerSpec spec{parse_sampler(a.sampler), a.radius_scale, a.seed, a.samples};
  const auto sampled = data::sample_oos_inits(td.dataset, spec);
  const auto rolls = rollout::rollout_batch(compiled, sampled, cfg);
  bounds::EllipseRegion region{foci, bounds::region_scale(foci, sampled)};
  in.R = region.R;

  auto alpha_from = [&](std::size_t extra) {
    std::vector<Trajectory> pool(rolls.begin(), rolls.end());
    pool.insert(pool.end(), in_rolls.begin(), in_rolls.end());
    if (extra > 0) {
      data::SamplerSpec more = spec;
      more.seed = a.seed + 1;
      more.count = extra;
      const auto extra_rolls = rollout::rollout_batch(compiled, data::sample_oos_inits(td.dataset, more), cfg);
      pool.insert(pool.end(), extra_rolls.begin(), extra_rolls.end());
    }
    return bounds::estimate_alpha(pool, in.gamma);
  };

  std::vector<double> observed, term_one, worst;
  auto evaluate = [&] {
    observed.clear();
    term_one.clear();
    worst.clear();
    std::size_t violations = 0;
    const double t2 = bounds::term_two(in.alpha, in.R, in.gamma, in.H, in.M);
    for (std::size_t s = 0; s < sampled.size(); ++s) {
      observed.push_back(loss::weighted_loss(rolls[s], demos, mse, ck.config.eps_dist));
      worst.push_back(bounds::worst_case_bound(sampled[s], region, in, ck.config.eps_dist));
      term_one.push_back(worst.back() - t2);
      if (observed.back() > worst.back()) ++violations;
    }
    return violations;
  };

  auto est = alpha_from(0);
  in.alpha = bounds::kAlphaSafety * est.alpha;
  std::size_t violations = evaluate();
  bool reestimated = false;
  if (violations > 0) {
    reestimated = true;
    est = alpha_from(4 * a.samples);
    in.alpha = bounds::kAlphaSafety * est.alpha;
    violations = evaluate();
  }

  const double t2 = bounds::term_two(in.alpha, in.R, in.gamma, in.H, in.M);
  const double corollary = bounds::true_loss_bound(in);
  const auto obs = stats(observed);
  const auto t1 = stats(term_one);
  const auto wc = stats(worst);
  double min_margin = INFINITY;
  for (std::size_t s = 0; s < observed.size(); ++s) min_margin = std::min(min_margin, worst[s] - observed[s]);

  out << "dataset " << td.dataset.name << ": M " << in.M << ", H " << in.H << ", normalized units, mse metric\n";
  out << "samples " << sampled.size() << " (" << a.sampler << ", radius scale " << a.radius_scale << ", seed " << a.seed
      << ")" << (reestimated ? ", alpha re-estimated with 4x samples" : "") << "\n";
  out << "alpha_hat " << sci(est.alpha) << " from " << est.pairs << " pairs; alpha (x" << bounds::kAlphaSafety
      << ") " << sci(in.alpha) << "\n";
  out << "gamma " << sci(in.gamma) << "\n";
  out << "R " << sci(in.R) << "\n";
  out << "per-demo mse";
  for (double v : in.per_demo_mse) out << " " << sci(v);
  out << "\n";
  out << "term (i) mean " << sci(t1.mean) << " min " << sci(*std::min_element(term_one.begin(), term_one.end()))
      << " max " << sci(*std::max_element(term_one.begin(), term_one.end())) << "\n";
  out << "term (ii) " << sci(t2) << "\n";
  out << "worst-case bound mean " << sci(wc.mean) << " min " << sci(*std::min_element(worst.begin(), worst.end()))
      << " max " << sci(*std::max_element(worst.begin(), worst.end())) << "\n";
  out << "expected-loss bound " << sci(corollary) << "\n";
  out << "observed oos mse " << sci(obs.mean) << " +- " << sci(obs.std) << " max "
      << sci(*std::max_element(observed.begin(), observed.end())) << "\n";
  out << "margin: min per-sample " << sci(min_margin) << ", expected-loss bound minus observed mean "
      << sci(corollary - obs.mean) << "\n";
  out << "violations " << violations << "\n";
  if (violations > 0 || !(obs.mean <= corollary)) throw Error("bound: observed loss exceeds the certificate");
  return 0;
}

// ---- verify ----------------------------------------------------------------------

int verify_cmd(const verify::Options& options, std::ostream& out) {
  const auto results = verify::run_all(options);
  std::size_t failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    if (!r.passed) ++failed;
  }
  out << (results.size() - failed) << "/" << results.size() << " suites passed\n";
  return failed == 0 ? 0 : 2;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contractive imitation policies: training, rollouts, evaluation and loss certificates", "renpol"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Synthesize a demonstration dataset");
  gen->add_option("--kind", gd.kind, "sine, s_curve or line")->capture_default_str();
  gen->add_option("--M", gd.M, "Number of demonstrations")->capture_default_str();
  gen->add_option("--H", gd.H, "States per demonstration")->capture_default_str();
  gen->add_option("--dim", gd.dim, "State dimension")->capture_default_str();
  gen->add_option("--noise", gd.noise, "Gaussian noise std on interior points")->capture_default_str();
  gen->add_option("--seed", gd.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gd.out, "Output CSV")->required();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a policy on a dataset");
  tr->add_option("--data", ta.data, "Dataset CSV")->required();
  tr->add_option("--config", ta.config, "key=value config file (flags take precedence)");
  tr->add_option("--out", ta.out, "Checkpoint path")->required();
  tr->add_option("--log", ta.log, "JSON-lines training log (default: stdout)");
  tr->add_flag("--learn-gamma", ta.learn_gamma, "Learn the contraction rate");
  tr->add_flag("--serial", ta.serial, "Compute per-demo gradients on one thread");
  const std::pair<const char*, const char*> train_flags[] = {
      {"seed", "--seed"},
      {"epochs", "--epochs"},
      {"lr", "--lr"},
      {"horizon", "--horizon"},
      {"substeps", "--substeps"},
      {"solver", "--solver"},
      {"metric", "--metric"},
      {"beta", "--beta"},
      {"latent_dim", "--latent-dim"},
      {"implicit_dim", "--implicit-dim"},
      {"coupling_layers", "--coupling-layers"},
      {"coupling_width", "--coupling-width"},
      {"gamma", "--gamma"},
      {"gamma_min", "--gamma-min"},
      {"mu", "--mu"},
      {"c", "--c"},
      {"gamma0", "--gamma0"},
      {"log_every", "--log-every"},
      {"checkpoint_every", "--checkpoint-every"},
  };
  for (const auto& [key, flag] : train_flags) ta.given[key] = tr->add_option(flag, ta.overrides[key]);

  RolloutArgs ra;
  std::uint64_t unused_seed = 0;
  auto* ro = app.add_subcommand("rollout", "Roll out a trained policy");
  ro->add_option("--ckpt", ra.ckpt, "Checkpoint")->required();
  ro->add_option("--y0", ra.y0, "Initial state as a comma-separated list (repeatable)");
  ro->add_option("--from-data", ra.from_data, "Use every initial state of this dataset");
  ro->add_option("--out", ra.out, "Output CSV (default: stdout)");
  ro->add_option("--seed", unused_seed, "Accepted for uniformity; rollouts are deterministic");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "In-sample and out-of-sample loss report");
  ev->add_option("--ckpt", ea.ckpt, "Checkpoint")->required();
  ev->add_option("--data", ea.data, "Dataset CSV")->required();
  ev->add_option("--oos-radius-scale", ea.radius_scale, "OOS ball radius as a fraction of ||y0||")->capture_default_str();
  ev->add_option("--samples", ea.samples, "OOS initial states (spread evenly over demos)")->capture_default_str();
  ev->add_option("--seed", ea.seed, "Sampler seed")->capture_default_str();
  ev->add_option("--sampler", ea.sampler, "hypersphere or region")->capture_default_str();
  ev->add_option("--beta", ea.beta, "soft-DTW smoothing")->capture_default_str();
  ev->add_option("--traj-out", ea.traj_out, "Write rollouts to <prefix>_in.csv and <prefix>_oos.csv");

  BoundArgs ba;
  auto* bo = app.add_subcommand("bound", "Out-of-sample loss certificate");
  bo->add_option("--ckpt", ba.ckpt, "Checkpoint");
  bo->add_option("--data", ba.data, "Dataset CSV");
  bo->add_option("--samples", ba.samples, "Sampled initial states")->capture_default_str();
  bo->add_option("--seed", ba.seed, "Sampler seed")->capture_default_str();
  bo->add_option("--oos-radius-scale", ba.radius_scale, "Sampling radius fraction")->capture_default_str();
  bo->add_option("--sampler", ba.sampler, "hypersphere or region")->capture_default_str();
  ba.calculator = {bo->add_option("--alpha", ba.alpha, "Calculator mode: contraction constant"),
                   bo->add_option("--R", ba.R, "Calculator mode: region scale"),
                   bo->add_option("--gamma", ba.gamma, "Calculator mode: contraction rate"),
                   bo->add_option("--H", ba.H, "Calculator mode: horizon"),
                   bo->add_option("--M", ba.M, "Calculator mode: number of demonstrations")};

  verify::Options vo;
  auto* ve = app.add_subcommand("verify", "Run the built-in self-checks");
  ve->add_option("--seed", vo.seed, "Seed for the random inputs")->capture_default_str();
  ve->add_flag("--break-lmi", vo.break_lmi, "Corrupt the assembled A matrix (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return gen_data(gd, out);
    if (*tr) return train_cmd(ta, out);
    if (*ro) return rollout_cmd(ra, out);
    if (*ev) return eval_cmd(ea, out);
    if (*bo) return bound_cmd(ba, out);
    if (*ve) return verify_cmd(vo, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace renpol::cli
