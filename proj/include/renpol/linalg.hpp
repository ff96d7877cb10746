#pragma once

// Small dense linear algebra on row-major double buffers. Matrices here are
// at most a few hundred rows, so everything is plain O(n^3) loops.

#include <cstddef>
#include <span>
#include <vector>

namespace renpol::linalg {

struct Lu {
  std::size_t n = 0;
  std::vector<double> lu;  // packed L (unit diagonal) and U
  std::vector<std::size_t> perm;
  // max|u_ii| / min|u_ii|; a cheap lower bound on the condition number
  double pivot_ratio = 0.0;
  bool singular = false;
};

// LU with partial pivoting. Never throws; check `singular`.
Lu lu_decompose(std::span<const double> a, std::size_t n);
// Solves A x = b for each column of b (n x m, row-major) in place.
void lu_solve(const Lu& f, std::span<double> b, std::size_t m);
// Solves A^T x = b for a single right-hand side in place.
void lu_solve_transposed(const Lu& f, std::span<double> b);

// Inverse via LU. Throws renpol::Error with a condition estimate if singular.
std::vector<double> inverse(std::span<const double> a, std::size_t n);

// 1-norm condition number estimate ||A||_1 ||A^-1||_1 (infinity if singular).
double condition_1(std::span<const double> a, std::size_t n);

struct SymEig {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // column j is the eigenvector of values[j]
};

// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
SymEig sym_eig(std::span<const double> a, std::size_t n);
double eig_min_sym(std::span<const double> a, std::size_t n);

// c = a (m x k) * b (k x n)
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
          std::size_t k, std::size_t n);

}  // namespace renpol::linalg
