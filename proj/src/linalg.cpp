#include "renpol/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "renpol/error.hpp"

namespace renpol::linalg {

Lu lu_decompose(std::span<const double> a, std::size_t n) {
  Lu f;
  f.n = n;
  f.lu.assign(a.begin(), a.end());
  f.perm.resize(n);
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  auto& m = f.lu;
  double umax = 0.0;
  double umin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(m[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(m[i * n + k]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (p != k) {
      std::swap_ranges(m.begin() + static_cast<std::ptrdiff_t>(k * n),
                       m.begin() + static_cast<std::ptrdiff_t>(k * n + n),
                       m.begin() + static_cast<std::ptrdiff_t>(p * n));
      std::swap(f.perm[k], f.perm[p]);
    }
    umax = std::max(umax, best);
    umin = std::min(umin, best);
    if (best == 0.0) {
      f.singular = true;
      continue;
    }
    const double inv = 1.0 / m[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = m[i * n + k] * inv;
      m[i * n + k] = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) m[i * n + j] -= l * m[k * n + j];
    }
  }
  f.pivot_ratio = umin > 0.0 ? umax / umin : std::numeric_limits<double>::infinity();
  if (!f.singular && f.pivot_ratio > 1e15) f.singular = true;
  return f;
}

void lu_solve(const Lu& f, std::span<double> b, std::size_t m) {
  const std::size_t n = f.n;
  std::vector<double> x(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < m; ++c) x[i * m + c] = b[f.perm[i] * m + c];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < i; ++k) {
      const double l = f.lu[i * n + k];
      if (l == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) x[i * m + c] -= l * x[k * m + c];
    }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double u = f.lu[ii * n + k];
      if (u == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) x[ii * m + c] -= u * x[k * m + c];
    }
    const double d = 1.0 / f.lu[ii * n + ii];
    for (std::size_t c = 0; c < m; ++c) x[ii * m + c] *= d;
  }
  std::copy(x.begin(), x.end(), b.begin());
}

void lu_solve_transposed(const Lu& f, std::span<double> b) {
  // P A = L U  =>  A^T = U^T L^T P, so solve U^T y = b, L^T x' = y, x = P^T x'.
  const std::size_t n = f.n;
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= f.lu[k * n + i] * y[k];
    y[i] /= f.lu[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;)
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= f.lu[k * n + ii] * y[k];
  for (std::size_t i = 0; i < n; ++i) b[f.perm[i]] = y[i];
}

namespace {

double norm_1(std::span<const double> a, std::size_t n) {
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i * n + j]);
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

std::vector<double> inverse(std::span<const double> a, std::size_t n) {
  const Lu f = lu_decompose(a, n);
  if (f.singular) {
    std::ostringstream os;
    os << "inverse: matrix " << n << "x" << n
       << " is singular to working precision (condition estimate >= " << f.pivot_ratio << ")";
    throw Error(os.str());
  }
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  lu_solve(f, inv, n);
  return inv;
}

double condition_1(std::span<const double> a, std::size_t n) {
  const Lu f = lu_decompose(a, n);
  if (f.singular) return std::numeric_limits<double>::infinity();
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  lu_solve(f, inv, n);
  return norm_1(a, n) * norm_1(inv, n);
}

SymEig sym_eig(std::span<const double> a_in, std::size_t n) {
  std::vector<double> a(a_in.begin(), a_in.end());
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  // symmetrize against round-off in the caller
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a[i * n + j] + a[j * n + i]);
      a[i * n + j] = s;
      a[j * n + i] = s;
    }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x = a[i * n + j] * a[i * n + j];
        total += x;
        if (i != j) off += x;
      }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] < a[y * n + y]; });
  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a[order[j] * n + order[j]];
    for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + j] = v[i * n + order[j]];
  }
  return out;
}

double eig_min_sym(std::span<const double> a, std::size_t n) { return sym_eig(a, n).values.front(); }

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
          std::size_t k, std::size_t n) {
  std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m * n), 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = b.data() + p * n;
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
}

}  // namespace renpol::linalg
