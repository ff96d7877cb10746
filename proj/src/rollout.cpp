#include "renpol/rollout.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "renpol/linalg.hpp"

namespace renpol::rollout {

namespace ad = renpol::ad;

void SolverConfig::validate() const {
  if (horizon < 1) throw ValidationError("solver: horizon must be >= 1");
  if (substeps < 1) throw ValidationError("solver: substeps must be >= 1");
  if (!(duration > 0.0)) throw ValidationError("solver: duration must be positive");
}

void Trajectory::validate() const {
  if (horizon < 1) throw ValidationError("trajectory: needs at least one state");
  if (states.size() != horizon * dim) throw ShapeError("trajectory: state buffer does not match H x N_y");
  for (double v : states)
    if (!std::isfinite(v)) throw ValidationError("trajectory: non-finite state");
}

Trajectory to_trajectory(std::span<const Tensor> states, double dt) {
  Trajectory t;
  t.horizon = states.size();
  t.dim = states.empty() ? 0 : states[0].size();
  t.dt = dt;
  t.states.reserve(t.horizon * t.dim);
  for (const auto& s : states) t.states.insert(t.states.end(), s.data().begin(), s.data().end());
  return t;
}

Tensor as_tensor(const Trajectory& traj) { return Tensor({traj.horizon, traj.dim}, traj.states); }

Tensor pseudo_inverse(const Tensor& proj) {
  if (proj.rank() != 2) throw ShapeError("pseudo_inverse: projection must be a matrix");
  const std::size_t ny = proj.rows();
  const std::size_t nz = proj.cols();
  if (nz < ny) throw ValidationError("pseudo_inverse: latent dimension must be >= state dimension");
  const Tensor pt = ad::transpose(proj);
  const Tensor gram = ad::matmul(proj, pt);
  const auto eig = linalg::sym_eig(gram.data(), ny);
  const double lo = eig.values.front();
  const double hi = eig.values.back();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    std::ostringstream os;
    os << "pseudo_inverse: P P^T is near-singular (condition " << (lo > 0.0 ? hi / lo : INFINITY) << ")";
    throw Error(os.str());
  }
  return ad::matmul(pt, ad::inverse(gram));
}

Tensor encode_initial(const CompiledPolicy& policy, const Tensor& y0) {
  if (y0.size() != policy.state_dim()) throw ShapeError("encode_initial: y0 has wrong dimension");
  for (double v : y0.data())
    if (!std::isfinite(v)) throw ValidationError("encode_initial: non-finite initial state");
  return ad::matmul(policy.proj_pinv, flow::inverse(policy.stack, y0));
}

Tensor decode(const CompiledPolicy& policy, const Tensor& z) {
  return flow::forward(policy.stack, ad::matmul(policy.proj, z));
}

namespace {

Tensor rk4_step(const ren::RenMatrices& mats, const Tensor& z, double dt) {
  const Tensor k1 = ren::latent_derivative(mats, z);
  const Tensor k2 = ren::latent_derivative(mats, ad::add(z, ad::scale(k1, 0.5 * dt)));
  const Tensor k3 = ren::latent_derivative(mats, ad::add(z, ad::scale(k2, 0.5 * dt)));
  const Tensor k4 = ren::latent_derivative(mats, ad::add(z, ad::scale(k3, dt)));
  const Tensor incr = ad::add(ad::add(k1, k4), ad::scale(ad::add(k2, k3), 2.0));
  return ad::add(z, ad::scale(incr, dt / 6.0));
}

}  // namespace

std::vector<Tensor> integrate(const ren::RenMatrices& mats, const Tensor& z0, const SolverConfig& cfg) {
  cfg.validate();
  const double dt = cfg.dt();
  std::vector<Tensor> out;
  out.reserve(cfg.horizon);
  out.push_back(z0);
  Tensor z = z0;
  for (std::size_t i = 1; i < cfg.horizon; ++i) {
    for (std::size_t s = 0; s < cfg.substeps; ++s) {
      if (cfg.method == Method::euler)
        z = ad::add(z, ad::scale(ren::latent_derivative(mats, z), dt));
      else
        z = rk4_step(mats, z, dt);
    }
    for (double v : z.data())
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "integrate: non-finite latent state at stored step " << i;
        throw Error(os.str());
      }
    out.push_back(z);
  }
  return out;
}

std::vector<Tensor> rollout_states(const CompiledPolicy& policy, const Tensor& y0, const SolverConfig& cfg) {
  const Tensor z0 = encode_initial(policy, y0);
  const auto latent = integrate(policy.mats, z0, cfg);
  std::vector<Tensor> states;
  states.reserve(latent.size());
  for (const auto& z : latent) states.push_back(decode(policy, z));
  return states;
}

Trajectory rollout(const CompiledPolicy& policy, std::span<const double> y0, const SolverConfig& cfg) {
  const auto states = rollout_states(policy, Tensor::vector({y0.begin(), y0.end()}), cfg);
  return to_trajectory(states, cfg.sample_dt());
}

LatentRollout rollout_with_latent(const CompiledPolicy& policy, std::span<const double> y0,
                                  const SolverConfig& cfg) {
  const Tensor z0 = encode_initial(policy, Tensor::vector({y0.begin(), y0.end()}));
  const auto latent = integrate(policy.mats, z0, cfg);
  LatentRollout out;
  std::vector<Tensor> states;
  for (const auto& z : latent) {
    out.latent.push_back(z.values());
    states.push_back(decode(policy, z));
  }
  out.states = to_trajectory(states, cfg.sample_dt());
  return out;
}

std::vector<Trajectory> rollout_batch_serial(const CompiledPolicy& policy,
                                             std::span<const std::vector<double>> inits,
                                             const SolverConfig& cfg) {
  std::vector<Trajectory> out;
  out.reserve(inits.size());
  for (const auto& y0 : inits) out.push_back(rollout(policy, y0, cfg));
  return out;
}

std::vector<Trajectory> rollout_batch(const CompiledPolicy& policy, std::span<const std::vector<double>> inits,
                                      const SolverConfig& cfg) {
  if (policy.proj.tracked() || policy.mats.A.tracked())
    throw Error("rollout_batch: policy tensors must not be tracked (shared read-only snapshot)");
  const auto count = static_cast<std::ptrdiff_t>(inits.size());
  std::vector<Trajectory> out(inits.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = rollout(policy, inits[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
#pragma omp critical(renpol_rollout_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace renpol::rollout
