#include "renpol/policy.hpp"

#include <cmath>
#include <random>

#include "renpol/rollout.hpp"

namespace renpol {

namespace ad = renpol::ad;

void PolicyConfig::validate() const {
  if (state_dim < 1) throw ValidationError("policy: state dimension must be >= 1");
  if (latent_dim < state_dim)
    throw ValidationError("policy: latent dimension (" + std::to_string(latent_dim) +
                          ") must be >= state dimension (" + std::to_string(state_dim) + ")");
  if (implicit_dim < 1) throw ValidationError("policy: implicit dimension must be >= 1");
  if (coupling_layers > 0 && coupling_width < 1) throw ValidationError("policy: coupling width must be >= 1");
  if (!(eps > 0.0) || !(eps_P > 0.0)) throw ValidationError("policy: eps and eps_P must be positive");
  if (!(s_clamp > 0.0)) throw ValidationError("policy: s_clamp must be positive");
  if (rate.mode == ren::RateMode::fixed && !(rate.value > 0.0))
    throw ValidationError("policy: contraction rate must be positive");
  if (rate.mode == ren::RateMode::learnable && !(rate.gamma_min > 0.0))
    throw ValidationError("policy: gamma_min must be positive");
}

namespace {

std::string layer_key(std::size_t k, const char* net, const char* field) {
  return "flow." + std::to_string(k) + "." + net + "." + field;
}

// Parameter names and shapes in canonical order.
std::vector<std::pair<std::string, ad::Shape>> layout(const PolicyConfig& c) {
  const std::size_t n = c.latent_dim;
  const std::size_t q = c.implicit_dim;
  std::vector<std::pair<std::string, ad::Shape>> out = {
      {"ren.X", {n + q, n + q}}, {"ren.X_P", {n, n}}, {"ren.lambda_log", {q}},
      {"ren.S_A", {n, n}},       {"ren.S_D", {q, q}}, {"ren.B1", {n, q}},
  };
  if (c.rate.mode == ren::RateMode::learnable) out.push_back({"ren.gamma_raw", {}});
  out.push_back({"proj", {c.state_dim, n}});
  const std::size_t keep = (c.state_dim + 1) / 2;
  const std::size_t move = c.state_dim - keep;
  const std::size_t w = c.coupling_width;
  for (std::size_t k = 0; k < c.coupling_layers; ++k)
    for (const char* net : {"s", "t"}) {
      out.push_back({layer_key(k, net, "W1"), {w, keep}});
      out.push_back({layer_key(k, net, "b1"), {w}});
      out.push_back({layer_key(k, net, "W2"), {w, w}});
      out.push_back({layer_key(k, net, "b2"), {w}});
      out.push_back({layer_key(k, net, "W3"), {move, w}});
      out.push_back({layer_key(k, net, "b3"), {move}});
    }
  return out;
}

template <class Bind>
PolicyModel build_model(const Policy& policy, Bind&& bind_one) {
  const auto& c = policy.config();
  PolicyModel m;
  m.rate = c.rate;
  m.ren.n = c.latent_dim;
  m.ren.q = c.implicit_dim;
  m.ren.eps = c.eps;
  m.ren.eps_P = c.eps_P;
  std::size_t i = 0;
  m.ren.X = bind_one(i++);
  m.ren.X_P = bind_one(i++);
  m.ren.lambda_log = bind_one(i++);
  m.ren.S_A = bind_one(i++);
  m.ren.S_D = bind_one(i++);
  m.ren.B1 = bind_one(i++);
  if (c.rate.mode == ren::RateMode::learnable) m.gamma_raw = bind_one(i++);
  m.proj = bind_one(i++);
  for (std::size_t k = 0; k < c.coupling_layers; ++k) {
    flow::CouplingLayer layer;
    layer.dim = c.state_dim;
    layer.parity = static_cast<int>(k % 2);
    layer.s_clamp = c.s_clamp;
    for (flow::Mlp* net : {&layer.s_net, &layer.t_net}) {
      net->W1 = bind_one(i++);
      net->b1 = bind_one(i++);
      net->W2 = bind_one(i++);
      net->b2 = bind_one(i++);
      net->W3 = bind_one(i++);
      net->b3 = bind_one(i++);
    }
    m.stack.layers.push_back(std::move(layer));
  }
  return m;
}

}  // namespace

Policy::Policy(PolicyConfig config) : config_(std::move(config)) {
  config_.validate();
  for (auto& [name, shape] : layout(config_)) params_.emplace_back(name, ad::Tensor(shape));
}

std::size_t Policy::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw ValidationError("policy: no parameter named '" + name + "'");
}

ad::Parameter& Policy::param(const std::string& name) { return params_[index_of(name)]; }
const ad::Parameter& Policy::param(const std::string& name) const { return params_[index_of(name)]; }

std::size_t Policy::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void Policy::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

PolicyModel view(const Policy& policy) {
  return build_model(policy, [&](std::size_t i) { return policy.params()[i].value; });
}

PolicyModel bind(Policy& policy, ad::Tape& tape) {
  return build_model(policy, [&](std::size_t i) { return tape.leaf(policy.params()[i]); });
}

PolicyModel bind_variables(const Policy& policy, ad::Tape& tape, std::vector<ad::Tensor>& leaves) {
  leaves.clear();
  return build_model(policy, [&](std::size_t i) {
    leaves.push_back(tape.variable(policy.params()[i].value));
    return leaves.back();
  });
}

CompiledPolicy compile(const PolicyModel& model) {
  CompiledPolicy c;
  c.gamma = ren::effective_gamma(model.rate, model.gamma_raw);
  c.mats = ren::assemble(model.ren, c.gamma);
  c.proj = model.proj;
  c.proj_pinv = rollout::pseudo_inverse(model.proj);
  c.stack = model.stack;
  return c;
}

CompiledPolicy compile(const Policy& policy) { return compile(view(policy)); }

Policy init_policy(const PolicyConfig& config, std::uint64_t seed, double proj_noise) {
  Policy policy(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](ad::Parameter& p, double std_dev) {
    for (double& v : p.value.mutable_data()) v = std_dev * normal(rng);
  };
  const auto fan_std = [](std::size_t fan_in) { return 0.2 / std::sqrt(static_cast<double>(fan_in)); };
  const std::size_t n = config.latent_dim;
  const std::size_t q = config.implicit_dim;

  gaussian(policy.param("ren.X"), fan_std(n + q));
  gaussian(policy.param("ren.X_P"), fan_std(n));
  gaussian(policy.param("ren.S_A"), fan_std(n));
  gaussian(policy.param("ren.S_D"), fan_std(q));
  gaussian(policy.param("ren.B1"), fan_std(q));
  if (config.rate.mode == ren::RateMode::learnable) {
    const double start = config.rate.value > config.rate.gamma_min ? config.rate.value : config.rate.gamma_min + 0.5;
    policy.param("ren.gamma_raw").value.mutable_data()[0] = ren::gamma_raw_for(config.rate, start);
  }

  auto& proj = policy.param("proj").value;
  for (std::size_t i = 0; i < config.state_dim; ++i)
    for (std::size_t j = 0; j < n; ++j)
      proj.mutable_data()[i * n + j] = (i == j ? 1.0 : 0.0) + proj_noise * normal(rng);

  for (std::size_t k = 0; k < config.coupling_layers; ++k)
    for (const char* net : {"s", "t"}) {
      auto& w1 = policy.param(layer_key(k, net, "W1"));
      gaussian(w1, fan_std(w1.value.cols()));
      gaussian(policy.param(layer_key(k, net, "W2")), fan_std(config.coupling_width));
      // biases and the last layer stay zero: g starts as the identity
    }
  return policy;
}

Policy random_policy(const PolicyConfig& config, std::uint64_t seed, double ren_std, double flow_std) {
  Policy policy = init_policy(config, seed, 0.1);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& p : policy.params()) {
    double std_dev = 0.0;
    if (p.name.rfind("ren.", 0) == 0 && p.name != "ren.gamma_raw") std_dev = ren_std;
    else if (p.name.rfind("flow.", 0) == 0) std_dev = flow_std;
    if (std_dev == 0.0) continue;
    // coupling-net weight matrices are scaled by 1/sqrt(fan_in), as in flow::random_stack
    if (p.name.rfind("flow.", 0) == 0 && p.value.rank() == 2)
      std_dev /= std::sqrt(static_cast<double>(p.value.cols()));
    for (double& v : p.value.mutable_data()) v = std_dev * normal(rng);
  }
  return policy;
}

}  // namespace renpol
