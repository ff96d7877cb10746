#include "renpol/train.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "renpol/linalg.hpp"

namespace renpol::train {

namespace ad = renpol::ad;

void TrainConfig::validate() const {
  policy.validate();
  solver.validate();
  metric.validate();
  if (solver.horizon < 2) throw ValidationError("train: horizon must be >= 2");
  if (!(lr >= 0.0)) throw ValidationError("train: learning rate must be non-negative");
  if (!(eps_dist > 0.0)) throw ValidationError("train: eps_dist must be positive");
  if (!(clip_norm > 0.0)) throw ValidationError("train: clip norm must be positive");
  if (policy.rate.mode == ren::RateMode::learnable && !(policy.rate.gamma_min > rate_learning.gamma0))
    throw ValidationError("train: gamma_min must exceed gamma0 so the rate penalty stays finite");
}

// ---- key/value config -------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, r.ptr};
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v))
    throw ValidationError("config: '" + key + "' expects a number, got '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& key, const std::string& s) {
  std::size_t v = 0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ValidationError("config: '" + key + "' expects a non-negative integer, got '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_key_values(TrainConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    auto& p = cfg.policy;
    if (key == "latent_dim") p.latent_dim = to_size(key, value);
    else if (key == "implicit_dim") p.implicit_dim = to_size(key, value);
    else if (key == "state_dim") p.state_dim = to_size(key, value);
    else if (key == "coupling_layers") p.coupling_layers = to_size(key, value);
    else if (key == "coupling_width") p.coupling_width = to_size(key, value);
    else if (key == "eps") p.eps = to_double(key, value);
    else if (key == "eps_P") p.eps_P = to_double(key, value);
    else if (key == "s_clamp") p.s_clamp = to_double(key, value);
    else if (key == "gamma") p.rate.value = to_double(key, value);
    else if (key == "gamma_min") p.rate.gamma_min = to_double(key, value);
    else if (key == "gamma_mode") {
      if (value == "fixed") p.rate.mode = ren::RateMode::fixed;
      else if (value == "learnable") p.rate.mode = ren::RateMode::learnable;
      else throw ValidationError("config: gamma_mode must be fixed or learnable");
    } else if (key == "horizon") cfg.solver.horizon = to_size(key, value);
    else if (key == "substeps") cfg.solver.substeps = to_size(key, value);
    else if (key == "solver") {
      if (value == "euler") cfg.solver.method = rollout::Method::euler;
      else if (value == "rk4") cfg.solver.method = rollout::Method::rk4;
      else throw ValidationError("config: solver must be euler or rk4");
    } else if (key == "metric") {
      if (value == "mse") cfg.metric.kind = loss::MetricKind::mse;
      else if (value == "soft_dtw") cfg.metric.kind = loss::MetricKind::soft_dtw;
      else throw ValidationError("config: metric must be mse or soft_dtw");
    } else if (key == "beta") cfg.metric.beta = to_double(key, value);
    else if (key == "mu") cfg.rate_learning.mu = to_double(key, value);
    else if (key == "c") cfg.rate_learning.c = to_double(key, value);
    else if (key == "gamma0") cfg.rate_learning.gamma0 = to_double(key, value);
    else if (key == "lr") cfg.lr = to_double(key, value);
    else if (key == "epochs") cfg.epochs = to_size(key, value);
    else if (key == "seed") cfg.seed = to_size(key, value);
    else if (key == "eps_dist") cfg.eps_dist = to_double(key, value);
    else if (key == "clip_norm") cfg.clip_norm = to_double(key, value);
    else if (key == "log_every") cfg.log_every = to_size(key, value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = to_size(key, value);
    else throw ValidationError("config: unknown key '" + key + "'");
  }
}

std::map<std::string, std::string> to_key_values(const TrainConfig& cfg) {
  const auto& p = cfg.policy;
  return {
      {"latent_dim", std::to_string(p.latent_dim)},
      {"implicit_dim", std::to_string(p.implicit_dim)},
      {"state_dim", std::to_string(p.state_dim)},
      {"coupling_layers", std::to_string(p.coupling_layers)},
      {"coupling_width", std::to_string(p.coupling_width)},
      {"eps", fmt(p.eps)},
      {"eps_P", fmt(p.eps_P)},
      {"s_clamp", fmt(p.s_clamp)},
      {"gamma", fmt(p.rate.value)},
      {"gamma_min", fmt(p.rate.gamma_min)},
      {"gamma_mode", p.rate.mode == ren::RateMode::fixed ? "fixed" : "learnable"},
      {"horizon", std::to_string(cfg.solver.horizon)},
      {"substeps", std::to_string(cfg.solver.substeps)},
      {"solver", cfg.solver.method == rollout::Method::euler ? "euler" : "rk4"},
      {"metric", cfg.metric.kind == loss::MetricKind::mse ? "mse" : "soft_dtw"},
      {"beta", fmt(cfg.metric.beta)},
      {"mu", fmt(cfg.rate_learning.mu)},
      {"c", fmt(cfg.rate_learning.c)},
      {"gamma0", fmt(cfg.rate_learning.gamma0)},
      {"lr", fmt(cfg.lr)},
      {"epochs", std::to_string(cfg.epochs)},
      {"seed", std::to_string(cfg.seed)},
      {"eps_dist", fmt(cfg.eps_dist)},
      {"clip_norm", fmt(cfg.clip_norm)},
      {"log_every", std::to_string(cfg.log_every)},
      {"checkpoint_every", std::to_string(cfg.checkpoint_every)},
  };
}

// ---- optimizer ------------------------------------------------------------

OptimizerState OptimizerState::for_policy(const Policy& policy) {
  OptimizerState s;
  for (const auto& p : policy.params()) {
    s.m.emplace_back(p.value.shape());
    s.v.emplace_back(p.value.shape());
  }
  return s;
}

// ---- checkpoint -------------------------------------------------------------

namespace {

void write_tensor(std::string& out, const std::string& key, const std::string& name, const ad::Tensor& t) {
  out += key;
  out += ' ';
  out += name;
  out += ' ';
  out += std::to_string(t.rank());
  for (std::size_t d : t.shape()) {
    out += ' ';
    out += std::to_string(d);
  }
  for (double v : t.data()) {
    out += ' ';
    out += fmt(v);
  }
  out += '\n';
}

void write_vector(std::string& out, const std::string& key, const std::vector<double>& v) {
  out += key + ' ' + std::to_string(v.size());
  for (double x : v) out += ' ' + fmt(x);
  out += '\n';
}

ad::Tensor read_tensor(std::istringstream& in, const std::string& where) {
  std::size_t rank = 0;
  if (!(in >> rank) || rank > 2) throw ValidationError("checkpoint: bad rank in " + where);
  ad::Shape shape(rank);
  for (auto& d : shape)
    if (!(in >> d)) throw ValidationError("checkpoint: bad shape in " + where);
  std::vector<double> values(ad::shape_size(shape));
  for (auto& v : values) {
    std::string tok;
    if (!(in >> tok)) throw ValidationError("checkpoint: truncated values in " + where);
    v = to_double(where, tok);
  }
  return ad::Tensor(std::move(shape), std::move(values));
}

std::vector<double> read_vector(std::istringstream& in, const std::string& where) {
  std::size_t n = 0;
  if (!(in >> n)) throw ValidationError("checkpoint: bad length in " + where);
  std::vector<double> v(n);
  for (auto& x : v) {
    std::string tok;
    if (!(in >> tok)) throw ValidationError("checkpoint: truncated " + where);
    x = to_double(where, tok);
  }
  return v;
}

}  // namespace

std::string serialize(const Checkpoint& ckpt) {
  std::string out = "renpol-checkpoint " + std::to_string(ckpt.version) + "\n";
  for (const auto& [k, v] : to_key_values(ckpt.config)) out += "config " + k + " " + v + "\n";
  write_vector(out, "norm.shift", ckpt.norm.shift);
  write_vector(out, "norm.scale", ckpt.norm.scale);
  out += "summary.epochs_done " + std::to_string(ckpt.summary.epochs_done) + "\n";
  out += "summary.last_loss " + fmt(ckpt.summary.last_loss) + "\n";
  out += "summary.last_gamma " + fmt(ckpt.summary.last_gamma) + "\n";
  out += "summary.last_eig_min " + fmt(ckpt.summary.last_eig_min) + "\n";
  out += "rng " + ckpt.rng_state + "\n";
  out += "opt.beta1 " + fmt(ckpt.opt.beta1) + "\n";
  out += "opt.beta2 " + fmt(ckpt.opt.beta2) + "\n";
  out += "opt.eps " + fmt(ckpt.opt.eps) + "\n";
  out += "opt.step " + std::to_string(ckpt.opt.step) + "\n";
  const auto& params = ckpt.policy.params();
  for (std::size_t i = 0; i < params.size(); ++i) write_tensor(out, "param", params[i].name, params[i].value);
  for (std::size_t i = 0; i < ckpt.opt.m.size(); ++i) write_tensor(out, "opt.m", params[i].name, ckpt.opt.m[i]);
  for (std::size_t i = 0; i < ckpt.opt.v.size(); ++i) write_tensor(out, "opt.v", params[i].name, ckpt.opt.v[i]);
  return out;
}

Checkpoint deserialize(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) throw ValidationError("checkpoint: empty document");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != "renpol-checkpoint") throw ValidationError("checkpoint: not a renpol checkpoint");
    if (version != 1) throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  std::map<std::string, std::string> kv;
  std::map<std::string, ad::Tensor> params, moments1, moments2;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string key;
    in >> key;
    if (key == "config") {
      std::string k, v;
      in >> k >> v;
      kv[k] = v;
    } else if (key == "norm.shift") {
      ck.norm.shift = read_vector(in, key);
    } else if (key == "norm.scale") {
      ck.norm.scale = read_vector(in, key);
    } else if (key == "summary.epochs_done") {
      std::string v;
      in >> v;
      ck.summary.epochs_done = to_size(key, v);
    } else if (key == "summary.last_loss" || key == "summary.last_gamma" || key == "summary.last_eig_min" ||
               key == "opt.beta1" || key == "opt.beta2" || key == "opt.eps") {
      std::string v;
      in >> v;
      const double d = to_double(key, v);
      if (key == "summary.last_loss") ck.summary.last_loss = d;
      else if (key == "summary.last_gamma") ck.summary.last_gamma = d;
      else if (key == "summary.last_eig_min") ck.summary.last_eig_min = d;
      else if (key == "opt.beta1") ck.opt.beta1 = d;
      else if (key == "opt.beta2") ck.opt.beta2 = d;
      else ck.opt.eps = d;
    } else if (key == "opt.step") {
      std::string v;
      in >> v;
      ck.opt.step = to_size(key, v);
    } else if (key == "rng") {
      ck.rng_state = line.size() > 4 ? line.substr(4) : std::string();
    } else if (key == "param" || key == "opt.m" || key == "opt.v") {
      std::string name;
      in >> name;
      auto& target = key == "param" ? params : key == "opt.m" ? moments1 : moments2;
      target[name] = read_tensor(in, key + " " + name);
    } else {
      throw ValidationError("checkpoint: unknown record '" + key + "'");
    }
  }
  apply_key_values(ck.config, kv);
  ck.config.validate();
  ck.policy = Policy(ck.config.policy);
  ck.opt.m.clear();
  ck.opt.v.clear();
  for (auto& p : ck.policy.params()) {
    auto it = params.find(p.name);
    if (it == params.end()) throw ValidationError("checkpoint: missing parameter " + p.name);
    if (it->second.shape() != p.value.shape()) throw ValidationError("checkpoint: shape mismatch for " + p.name);
    p.value = it->second;
    p.zero_grad();
    auto m1 = moments1.find(p.name);
    auto m2 = moments2.find(p.name);
    ck.opt.m.push_back(m1 != moments1.end() ? m1->second : ad::Tensor(p.value.shape()));
    ck.opt.v.push_back(m2 != moments2.end() ? m2->second : ad::Tensor(p.value.shape()));
  }
  if (params.size() != ck.policy.params().size()) throw ValidationError("checkpoint: unexpected extra parameters");
  if (ck.norm.shift.size() != ck.config.policy.state_dim || ck.norm.scale.size() != ck.config.policy.state_dim)
    throw ValidationError("checkpoint: normalization does not match state dimension");
  return ck;
}

void save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write checkpoint " + path.string());
  f << serialize(ckpt);
  if (!f) throw Error("write failed for checkpoint " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return deserialize(buf.str());
}

// ---- data preparation -------------------------------------------------------

TrainingData prepare(const data::Dataset& raw, const data::NormalizationSpec& norm, std::size_t horizon) {
  raw.validate();
  if (norm.shift.size() != raw.dim || norm.scale.size() != raw.dim)
    throw ValidationError("dataset dimension " + std::to_string(raw.dim) + " does not match the model's " +
                          std::to_string(norm.shift.size()));
  data::Dataset ds = raw;
  for (auto& d : ds.demos)
    for (std::size_t i = 0; i < d.length(ds.dim); ++i) {
      const auto v = norm.apply(std::span<const double>(d.states.data() + i * ds.dim, ds.dim));
      std::copy(v.begin(), v.end(), d.states.begin() + static_cast<std::ptrdiff_t>(i * ds.dim));
    }
  ds.target = norm.apply(raw.target);
  ds.units = data::Units::normalized;
  TrainingData out;
  out.dataset = data::resample(ds, horizon);
  out.norm = norm;
  for (const auto& t : out.dataset.trajectories()) out.demos.push_back(rollout::as_tensor(t));
  return out;
}

TrainingData prepare(const data::Dataset& raw, std::size_t horizon) {
  return prepare(raw, data::normalize(raw).second, horizon);
}

// ---- gradients ----------------------------------------------------------------

namespace {

std::vector<ad::Tensor> zeros_like(const Policy& policy) {
  std::vector<ad::Tensor> g;
  for (const auto& p : policy.params()) g.emplace_back(p.value.shape());
  return g;
}

struct DemoTerm {
  double loss = 0.0;
  std::vector<ad::Tensor> grads;
};

DemoTerm demo_term(const Policy& policy, std::span<const ad::Tensor> demos, std::size_t m, const TrainConfig& cfg) {
  ad::Tape tape;
  std::vector<ad::Tensor> leaves;
  const PolicyModel model = bind_variables(policy, tape, leaves);
  const CompiledPolicy compiled = compile(model);
  const ad::Tensor y0 = ad::row(demos[m], 0);
  const auto states = rollout::rollout_states(compiled, y0, cfg.solver);
  const ad::Tensor traj = ad::stack_rows(states);
  const ad::Tensor term = ad::scale(loss::weighted_loss(traj, demos, cfg.metric, cfg.eps_dist),
                                    1.0 / static_cast<double>(demos.size()));
  DemoTerm out;
  out.loss = term.item();
  if (term.tracked()) {
    tape.backward(term);
    for (const auto& leaf : leaves) out.grads.push_back(tape.grad(leaf));
  } else {
    out.grads = zeros_like(policy);
  }
  return out;
}

}  // namespace

Gradients loss_and_gradients(const Policy& policy, std::span<const ad::Tensor> demos, const TrainConfig& cfg,
                             bool parallel) {
  if (demos.empty()) throw ValidationError("train: no demonstrations");
  for (const auto& d : demos)
    if (d.rows() != cfg.solver.horizon && cfg.metric.kind == loss::MetricKind::mse)
      throw ValidationError("train: demonstrations must be resampled to the horizon for MSE");

  const auto count = static_cast<std::ptrdiff_t>(demos.size());
  std::vector<DemoTerm> terms(demos.size());
  if (parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t m = 0; m < count; ++m) {
      try {
        terms[static_cast<std::size_t>(m)] = demo_term(policy, demos, static_cast<std::size_t>(m), cfg);
      } catch (...) {
#pragma omp critical(renpol_train_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t m = 0; m < demos.size(); ++m) terms[m] = demo_term(policy, demos, m, cfg);
  }

  Gradients out;
  out.grads = zeros_like(policy);
  for (const auto& t : terms) {
    out.loss += t.loss;
    for (std::size_t i = 0; i < out.grads.size(); ++i) {
      auto g = out.grads[i].mutable_data();
      const auto s = t.grads[i].data();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += s[k];
    }
  }

  if (cfg.policy.rate.mode == ren::RateMode::learnable && cfg.rate_learning.mu != 0.0) {
    // mu (h(gamma) - c) with h = 1/(gamma - gamma0)^2: rewards faster contraction
    ad::Tape tape;
    const std::size_t idx = policy.index_of("ren.gamma_raw");
    const ad::Tensor raw = tape.variable(policy.params()[idx].value);
    const ad::Tensor gamma = ren::effective_gamma(cfg.policy.rate, raw);
    const ad::Tensor penalty = ad::neg(loss::augmented_loss(ad::Tensor::scalar(0.0), gamma, cfg.rate_learning.mu,
                                                            cfg.rate_learning.c, cfg.rate_learning.gamma0));
    tape.backward(penalty);
    out.loss += penalty.item();
    out.grads[idx].mutable_data()[0] += tape.grad(raw).item();
  }

  if (!std::isfinite(out.loss)) throw Error("train: non-finite loss (" + std::to_string(out.loss) + ")");
  for (std::size_t i = 0; i < out.grads.size(); ++i)
    for (double v : out.grads[i].data())
      if (!std::isfinite(v)) throw Error("train: non-finite gradient for parameter " + policy.params()[i].name);
  return out;
}

double train_step(Policy& policy, std::span<const ad::Tensor> demos, const TrainConfig& cfg, OptimizerState& opt) {
  Gradients g = loss_and_gradients(policy, demos, cfg, cfg.parallel);
  policy.zero_grad();

  double sq = 0.0;
  for (const auto& t : g.grads)
    for (double v : t.data()) sq += v * v;
  const double gnorm = std::sqrt(sq);
  const double clip = gnorm > cfg.clip_norm ? cfg.clip_norm / gnorm : 1.0;

  if (opt.m.size() != policy.params().size()) opt = OptimizerState::for_policy(policy);
  ++opt.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  auto& params = policy.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value.mutable_data();
    auto grad = params[i].grad.mutable_data();
    auto m = opt.m[i].mutable_data();
    auto v = opt.v[i].mutable_data();
    const auto gi = g.grads[i].data();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double gk = gi[k] * clip;
      grad[k] = gk;
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * gk;
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * gk * gk;
      value[k] -= cfg.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + opt.eps);
    }
  }
  return g.loss;
}

// ---- loop -------------------------------------------------------------------

std::string to_json_line(const LogRecord& rec) {
  nlohmann::json j = {{"epoch", rec.epoch},
                      {"loss", rec.loss},
                      {"gamma", rec.gamma},
                      {"eig_min", rec.eig_min},
                      {"wall_time", rec.wall_time}};
  return j.dump();
}

Checkpoint start(const TrainConfig& cfg_in, const data::Dataset& raw) {
  TrainConfig cfg = cfg_in;
  cfg.policy.state_dim = raw.dim;
  cfg.validate();
  Checkpoint ck;
  ck.config = cfg;
  ck.policy = init_policy(cfg.policy, cfg.seed);
  ck.opt = OptimizerState::for_policy(ck.policy);
  ck.norm = data::normalize(raw).second;
  std::mt19937_64 rng(cfg.seed);
  std::ostringstream rs;
  rs << rng;
  ck.rng_state = rs.str();
  const CompiledPolicy compiled = compile(ck.policy);
  ck.summary.last_gamma = compiled.mats.gamma;
  ck.summary.last_eig_min = ren::lmi_eig_min(compiled.mats);
  return ck;
}

void resume(Checkpoint& ck, const data::Dataset& raw, const TrainOptions& options) {
  const TrainConfig& cfg = ck.config;
  if (raw.dim != cfg.policy.state_dim)
    throw ValidationError("dataset dimension " + std::to_string(raw.dim) + " does not match the model's " +
                          std::to_string(cfg.policy.state_dim));
  const TrainingData td = prepare(raw, ck.norm, cfg.solver.horizon);
  const auto t0 = std::chrono::steady_clock::now();
  while (ck.summary.epochs_done < cfg.epochs) {
    const double l = train_step(ck.policy, td.demos, cfg, ck.opt);
    ++ck.summary.epochs_done;
    ck.summary.last_loss = l;
    const bool last = ck.summary.epochs_done == cfg.epochs;
    const bool log_now = last || (cfg.log_every > 0 && ck.summary.epochs_done % cfg.log_every == 0);
    if (log_now) {
      const CompiledPolicy compiled = compile(ck.policy);
      LogRecord rec;
      rec.epoch = ck.summary.epochs_done;
      rec.loss = l;
      rec.gamma = compiled.mats.gamma;
      rec.eig_min = ren::lmi_eig_min(compiled.mats);
      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ck.summary.last_gamma = rec.gamma;
      ck.summary.last_eig_min = rec.eig_min;
      if (options.log) *options.log << to_json_line(rec) << '\n';
      if (options.on_log) options.on_log(rec);
    }
    if (!options.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        ck.summary.epochs_done % cfg.checkpoint_every == 0)
      save(ck, options.checkpoint_path);
  }
  if (!options.checkpoint_path.empty()) save(ck, options.checkpoint_path);
}

Checkpoint train(const TrainConfig& cfg, const data::Dataset& raw, const TrainOptions& options) {
  Checkpoint ck = start(cfg, raw);
  resume(ck, raw, options);
  return ck;
}

}  // namespace renpol::train
