#pragma once

// Dense helpers for the small (n <= 8) state dimensions used throughout.
// Matrices are row-major: A[i*n + j] = A^i_j maps component j to component i.

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace gd {

using Vec = std::vector<double>;

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// y = A x  (A is n x m, x has m entries, y has n)
inline void matvec(const double* A, const double* x, double* y, int n, int m) {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += A[i * m + j] * x[j];
    y[i] = s;
  }
}

// y_j = sum_i v_i A[i][j]  (row covector times matrix)
inline void vecmat(const double* v, const double* A, double* y, int n, int m) {
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i] * A[i * m + j];
    y[j] = s;
  }
}

// C = A B, all n x n
inline void matmul(const double* A, const double* B, double* C, int n) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += A[i * n + k] * B[k * n + j];
      C[i * n + j] = s;
    }
}

inline void mat_identity(double* A, int n) {
  for (int i = 0; i < n * n; ++i) A[i] = 0.0;
  for (int i = 0; i < n; ++i) A[i * n + i] = 1.0;
}

// Solve A X = B in place by Gaussian elimination with partial pivoting.
// A is n x n (destroyed), B is n x k (replaced by X).
inline void solve_inplace(double* A, double* B, int n, int k) {
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int col = 0; col < n; ++col) {
    int best = col;
    double mx = std::fabs(A[col * n + col]);
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(A[r * n + col]);
      if (v > mx) { mx = v; best = r; }
    }
    require(mx > 1e-300, ErrorCode::invalid_argument, "singular matrix in solve");
    if (best != col) {
      for (int j = 0; j < n; ++j) std::swap(A[col * n + j], A[best * n + j]);
      for (int j = 0; j < k; ++j) std::swap(B[col * k + j], B[best * k + j]);
    }
    double d = A[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      double f = A[r * n + col] / d;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) A[r * n + j] -= f * A[col * n + j];
      for (int j = 0; j < k; ++j) B[r * k + j] -= f * B[col * k + j];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double d = A[col * n + col];
    for (int j = 0; j < k; ++j) {
      double s = B[col * k + j];
      for (int r = col + 1; r < n; ++r) s -= A[col * n + r] * B[r * k + j];
      B[col * k + j] = s / d;
    }
  }
}

inline void mat_inverse(const double* A, double* Ainv, int n) {
  std::vector<double> tmp(A, A + n * n);
  mat_identity(Ainv, n);
  solve_inplace(tmp.data(), Ainv, n, n);
}

// Solve x A = b for a row covector x (i.e. A^T x^T = b^T).
inline void solve_row(const double* A, const double* b, double* x, int n) {
  std::vector<double> At(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) At[j * n + i] = A[i * n + j];
  std::vector<double> rhs(b, b + n);
  solve_inplace(At.data(), rhs.data(), n, 1);
  for (int i = 0; i < n; ++i) x[i] = rhs[i];
}

}  // namespace gd
