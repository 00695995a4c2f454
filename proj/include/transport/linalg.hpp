#pragma once

// Small dense linear algebra used by the Newton fit and the simplex solver.
// Everything here assumes matrices of order p <= a few dozen.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace transport::linalg {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

/// Solve H x = g for symmetric positive definite H via Cholesky.
/// Returns nullopt when a pivot is not strictly positive or not finite.
inline std::optional<std::vector<double>> cholesky_solve(const Matrix& h,
                                                         const std::vector<double>& g) {
  const std::size_t n = h.rows;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = h(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = h(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  // forward then backward substitution
  std::vector<double> x(g);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
    x[i] /= l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= l(k, ii) * x[k];
    x[ii] /= l(ii, ii);
  }
  return x;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(Matrix h) {
  const std::size_t n = h.rows;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += h(i, j) * h(i, j);
    if (off < 1e-28) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(h(p, q)) < 1e-300) continue;
        const double theta = (h(q, q) - h(p, p)) / (2.0 * h(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double hkp = h(k, p), hkq = h(k, q);
          h(k, p) = c * hkp - s * hkq;
          h(k, q) = s * hkp + c * hkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double hpk = h(p, k), hqk = h(q, k);
          h(p, k) = c * hpk - s * hqk;
          h(q, k) = s * hpk + c * hqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = h(i, i);
  return ev;
}

/// LU factorization with partial pivoting, for repeated solves against the
/// same square matrix (and its transpose).
struct LuFactor {
  Matrix lu;
  std::vector<std::size_t> perm;
  bool ok = false;

  explicit LuFactor(Matrix a) : lu(std::move(a)), perm(lu.rows) {
    const std::size_t n = lu.rows;
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    ok = true;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      double best = std::abs(lu(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu(i, k)) > best) {
          best = std::abs(lu(i, k));
          piv = i;
        }
      }
      if (!(best > 1e-13) || !std::isfinite(best)) {
        ok = false;
        return;
      }
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
        std::swap(perm[k], perm[piv]);
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        lu(i, k) /= lu(k, k);
        const double f = lu(i, k);
        for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      }
    }
  }

  /// Solve A x = b.
  std::vector<double> solve(const std::vector<double>& b) const {
    const std::size_t n = lu.rows;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k) x[i] -= lu(i, k) * x[k];
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= lu(ii, k) * x[k];
      x[ii] /= lu(ii, ii);
    }
    return x;
  }

  /// Solve A^T x = b.
  std::vector<double> solve_transpose(const std::vector<double>& b) const {
    const std::size_t n = lu.rows;
    // A^T = L^T U^T P (since P A = L U); solve U^T w = b, L^T v = w, x = P^T v.
    std::vector<double> w(b);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < i; ++k) w[i] -= lu(k, i) * w[k];
      w[i] /= lu(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k) w[ii] -= lu(k, ii) * w[k];
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm[i]] = w[i];
    return x;
  }
};

}  // namespace transport::linalg
