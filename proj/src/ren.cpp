#include "renpol/ren.hpp"

#include <cmath>
#include <sstream>

#include "renpol/linalg.hpp"

namespace renpol::ren {

namespace ad = renpol::ad;

void RenParams::validate() const {
  if (n < 1 || q < 1) throw ValidationError("RenParams: n and q must be >= 1");
  if (!(eps > 0.0) || !(eps_P > 0.0)) throw ValidationError("RenParams: eps and eps_P must be positive");
  auto check = [](const Tensor& t, ad::Shape shape, const char* name) {
    if (t.shape() != shape)
      throw ShapeError(std::string("RenParams: ") + name + " has shape " + ad::shape_str(t.shape()) +
                       ", expected " + ad::shape_str(shape));
    for (double v : t.data())
      if (!std::isfinite(v)) throw ValidationError(std::string("RenParams: non-finite entry in ") + name);
  };
  check(X, {n + q, n + q}, "X");
  check(X_P, {n, n}, "X_P");
  check(lambda_log, {q}, "lambda_log");
  check(S_A, {n, n}, "S_A");
  check(S_D, {q, q}, "S_D");
  check(B1, {n, q}, "B1");
}

Tensor effective_gamma(const ContractionRateSpec& spec, const Tensor& gamma_raw) {
  if (spec.mode == RateMode::fixed) {
    if (!(spec.value > 0.0)) throw ValidationError("contraction rate must be positive");
    return Tensor::scalar(spec.value);
  }
  if (!(spec.gamma_min > 0.0)) throw ValidationError("gamma_min must be positive");
  return ad::add_scalar(ad::softplus(gamma_raw), spec.gamma_min);
}

double gamma_raw_for(const ContractionRateSpec& spec, double gamma) {
  const double excess = gamma - spec.gamma_min;
  if (!(excess > 0.0)) throw ValidationError("initial gamma must exceed gamma_min");
  // softplus^-1(y) = log(expm1(y))
  return excess > 30.0 ? excess : std::log(std::expm1(excess));
}

namespace {

Tensor skew(const Tensor& s) { return ad::scale(ad::sub(s, ad::transpose(s)), 0.5); }

void require_finite(const Tensor& t, const char* what) {
  for (double v : t.data())
    if (!std::isfinite(v)) throw Error(std::string("assemble: non-finite entries in ") + what);
}

}  // namespace

RenMatrices assemble(const RenParams& p, const Tensor& gamma) {
  p.validate();
  if (gamma.size() != 1 || !(gamma.item() > 0.0)) throw ValidationError("assemble: gamma must be a positive scalar");
  const std::size_t n = p.n;
  const std::size_t q = p.q;

  const Tensor H = ad::add(ad::matmul(ad::transpose(p.X), p.X), ad::scale(Tensor::identity(n + q), p.eps));
  const Tensor H11 = ad::block(H, 0, 0, n, n);
  const Tensor H12 = ad::block(H, 0, n, n, q);
  const Tensor H22 = ad::block(H, n, n, q, q);

  RenMatrices m;
  m.gamma = gamma.item();
  m.P = ad::add(ad::matmul(ad::transpose(p.X_P), p.X_P), ad::scale(Tensor::identity(n), p.eps_P));
  m.Lambda = ad::diag(ad::exp(p.lambda_log));
  const Tensor lambda_inv = ad::diag(ad::exp(ad::neg(p.lambda_log)));

  Tensor P_inv;
  try {
    P_inv = ad::inverse(m.P);
  } catch (const Error& e) {
    throw Error(std::string("assemble: contraction metric P is numerically singular: ") + e.what());
  }

  // P A = -1/2 (H11 + 2 gamma P) + Sk(S_A)
  const Tensor PA = ad::add(ad::sub(ad::scale(H11, -0.5), ad::mul(gamma, m.P)), skew(p.S_A));
  m.A = ad::matmul(P_inv, PA);
  // Lambda D11 = Lambda - 1/2 H22 + Sk(S_D)
  const Tensor LD = ad::add(ad::sub(m.Lambda, ad::scale(H22, 0.5)), skew(p.S_D));
  m.D11 = ad::matmul(lambda_inv, LD);
  m.B1 = p.B1;
  // Lambda C1 = -(H12' + B1' P)
  m.C1 = ad::neg(ad::matmul(lambda_inv, ad::add(ad::transpose(H12), ad::matmul(ad::transpose(p.B1), m.P))));

  require_finite(m.A, "A");
  require_finite(m.C1, "C1");
  require_finite(m.D11, "D11");
  return m;
}

RenMatrices assemble(const RenParams& params, double gamma) { return assemble(params, Tensor::scalar(gamma)); }

std::vector<double> lmi_target(const RenParams& p) {
  const std::size_t N = p.n + p.q;
  std::vector<double> h(N * N);
  const auto x = p.X.data();
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < N; ++k) s += x[k * N + i] * x[k * N + j];
      h[i * N + j] = s + (i == j ? p.eps : 0.0);
    }
  return h;
}

std::vector<double> lmi_matrix(const RenMatrices& mats) {
  const std::size_t n = mats.n();
  const std::size_t q = mats.q();
  const std::size_t N = n + q;
  const Tensor A = mats.A.detach();
  const Tensor P = mats.P.detach();
  const Tensor L = mats.Lambda.detach();
  const Tensor PA = ad::matmul(P, A);
  const Tensor M11 = ad::sub(ad::neg(ad::add(ad::transpose(PA), PA)), ad::scale(P, 2.0 * mats.gamma));
  const Tensor M12 = ad::neg(ad::add(ad::matmul(ad::transpose(mats.C1.detach()), L), ad::matmul(P, mats.B1.detach())));
  const Tensor LD = ad::matmul(L, mats.D11.detach());
  const Tensor M22 = ad::sub(ad::scale(L, 2.0), ad::add(LD, ad::transpose(LD)));
  std::vector<double> m(N * N);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * N + j] = M11.at(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      m[i * N + n + j] = M12.at(i, j);
      m[(n + j) * N + i] = M12.at(i, j);
    }
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) m[(n + i) * N + n + j] = M22.at(i, j);
  return m;
}

double lmi_eig_min(const RenMatrices& mats) {
  const std::size_t N = mats.n() + mats.q();
  return linalg::eig_min_sym(lmi_matrix(mats), N);
}

namespace {

// v = C1 z + D11 w
void pre_activation(std::span<const double> C1, std::span<const double> D11, std::span<const double> z,
                    std::span<const double> w, std::size_t q, std::size_t n, std::span<double> v) {
  for (std::size_t i = 0; i < q; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += C1[i * n + j] * z[j];
    for (std::size_t j = 0; j < q; ++j) s += D11[i * q + j] * w[j];
    v[i] = s;
  }
}

double residual_norm(std::span<const double> w, std::span<const double> v, std::span<double> f) {
  double r = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    f[i] = w[i] - std::tanh(v[i]);
    r += f[i] * f[i];
  }
  return std::sqrt(r);
}

// J = I - diag(1 - tanh(v)^2) D11
std::vector<double> newton_jacobian(std::span<const double> D11, std::span<const double> v, std::size_t q) {
  std::vector<double> J(q * q);
  for (std::size_t i = 0; i < q; ++i) {
    const double t = std::tanh(v[i]);
    const double s = 1.0 - t * t;
    for (std::size_t j = 0; j < q; ++j) J[i * q + j] = (i == j ? 1.0 : 0.0) - s * D11[i * q + j];
  }
  return J;
}

constexpr int kMaxIterations = 200;
constexpr double kTolerance = 1e-10;

}  // namespace

Tensor equilibrium(const Tensor& C1, const Tensor& D11, const Tensor& z) {
  const std::size_t q = D11.rows();
  const std::size_t n = z.size();
  if (C1.rank() != 2 || C1.shape()[0] != q || C1.shape()[1] != n || D11.rank() != 2 || D11.shape()[1] != q)
    throw ShapeError("equilibrium: incompatible shapes C1 " + ad::shape_str(C1.shape()) + ", D11 " +
                     ad::shape_str(D11.shape()) + ", z " + ad::shape_str(z.shape()));
  const auto c1 = C1.data();
  const auto d11 = D11.data();
  const auto zv = z.data();

  // Newton with backtracking on ||F||, F(w) = w - tanh(C1 z + D11 w). The
  // Jacobian is nonsingular whenever 2 Lambda - Lambda D11 - D11' Lambda > 0.
  std::vector<double> w(q, 0.0), v(q), f(q), trial(q), fv(q), ft(q);
  pre_activation(c1, d11, zv, w, q, n, v);
  double res = residual_norm(w, v, f);
  int iter = 0;
  for (; iter < kMaxIterations && res > 1e-13; ++iter) {
    const auto J = newton_jacobian(d11, v, q);
    const linalg::Lu lu = linalg::lu_decompose(J, q);
    if (lu.singular) break;
    std::vector<double> step = f;
    linalg::lu_solve(lu, step, 1);
    double t = 1.0;
    double new_res = res;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < q; ++i) trial[i] = w[i] - t * step[i];
      pre_activation(c1, d11, zv, trial, q, n, fv);
      new_res = residual_norm(trial, fv, ft);
      if (new_res <= (1.0 - 1e-4 * t) * res) break;
      t *= 0.5;
    }
    if (!(new_res < res)) break;  // no further progress at machine precision
    w.swap(trial);
    v.swap(fv);
    f.swap(ft);
    res = new_res;
  }
  if (!(res <= kTolerance)) {
    std::ostringstream os;
    os << "equilibrium: implicit layer did not converge after " << iter << " iterations (residual " << res << ")";
    throw Error(os.str());
  }

  if (!C1.tracked() && !D11.tracked() && !z.tracked()) return Tensor({q}, std::move(w));

  std::vector<double> c1c(c1.begin(), c1.end());
  std::vector<double> d11c(d11.begin(), d11.end());
  std::vector<double> zc(zv.begin(), zv.end());
  std::vector<double> wc = w;
  std::vector<double> vc = v;
  return ad::make_op(
      "equilibrium", Tensor({q}, std::move(w)), {&C1, &D11, &z},
      [c1c = std::move(c1c), d11c = std::move(d11c), zc = std::move(zc), wc = std::move(wc), vc = std::move(vc), q,
       n](std::span<const double> g, std::span<double* const> in) {
        // dw = (I - S D11)^-1 S (dC1 z + C1 dz + dD11 w), S = diag(tanh'(v))
        const auto J = newton_jacobian(d11c, vc, q);
        const linalg::Lu lu = linalg::lu_decompose(J, q);
        if (lu.singular) throw Error("equilibrium: singular Jacobian in backward pass");
        std::vector<double> u(g.begin(), g.end());
        linalg::lu_solve_transposed(lu, u);
        std::vector<double> r(q);
        for (std::size_t i = 0; i < q; ++i) {
          const double t = std::tanh(vc[i]);
          r[i] = (1.0 - t * t) * u[i];
        }
        if (in[0])
          for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < n; ++j) in[0][i * n + j] += r[i] * zc[j];
        if (in[1])
          for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < q; ++j) in[1][i * q + j] += r[i] * wc[j];
        if (in[2])
          for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < q; ++i) s += c1c[i * n + j] * r[i];
            in[2][j] += s;
          }
      });
}

double equilibrium_residual(const RenMatrices& mats, std::span<const double> z, std::span<const double> w) {
  const std::size_t q = mats.q();
  std::vector<double> v(q), f(q);
  pre_activation(mats.C1.data(), mats.D11.data(), z, w, q, z.size(), v);
  return residual_norm(w, v, f);
}

Tensor latent_derivative(const RenMatrices& mats, const Tensor& z) {
  for (double v : z.data())
    if (!std::isfinite(v)) throw Error("latent_derivative: non-finite latent state");
  const Tensor w = equilibrium(mats.C1, mats.D11, z);
  return ad::add(ad::matmul(mats.A, z), ad::matmul(mats.B1, w));
}

double contraction_metric_energy(const RenMatrices& mats, std::span<const double> dz) {
  const std::size_t n = mats.n();
  if (dz.size() != n) throw ShapeError("contraction_metric_energy: dz has wrong length");
  const auto P = mats.P.data();
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += P[i * n + j] * dz[j];
    e += dz[i] * s;
  }
  return e;
}

RenParams random_params(std::size_t n, std::size_t q, std::mt19937_64& rng, double std_dev, double eps,
                        double eps_P) {
  std::normal_distribution<double> normal(0.0, std_dev);
  auto draw = [&](ad::Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.mutable_data()) v = normal(rng);
    return t;
  };
  RenParams p;
  p.n = n;
  p.q = q;
  p.eps = eps;
  p.eps_P = eps_P;
  p.X = draw({n + q, n + q});
  p.X_P = draw({n, n});
  p.lambda_log = draw({q});
  p.S_A = draw({n, n});
  p.S_D = draw({q, q});
  p.B1 = draw({n, q});
  return p;
}

}  // namespace renpol::ren
