#pragma once

// Small dense linear algebra over an arbitrary field. Sizes here are tiny
// (r <= 8 for systems, M <= ~30 for Pade tables) so plain Gaussian
// elimination with pivoting is all we need.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/scalar.hpp"

namespace stokeslab {

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), T(0)) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }

  std::vector<T> apply(const std::vector<T>& v) const {
    std::vector<T> out(static_cast<std::size_t>(rows_), T(0));
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) out[static_cast<std::size_t>(i)] += (*this)(i, j) * v[static_cast<std::size_t>(j)];
    }
    return out;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i) {
      for (int k = 0; k < a.cols_; ++k) {
        for (int j = 0; j < b.cols_; ++j) out(i, j) += a(i, k) * b(k, j);
      }
    }
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// LU factorisation with partial pivoting for square systems. For floating
/// coefficients a pivot below `singular_tol * max|entry|` counts as zero; exact
/// coefficients use an exact zero test.
template <typename T>
class LuSolver {
 public:
  explicit LuSolver(Matrix<T> a, double singular_tol = 1e-13) : lu_(std::move(a)) {
    const int n = lu_.rows();
    if (n != lu_.cols()) throw ValidationError("LU of non-square matrix");
    perm_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) scale = std::max(scale, pivot_magnitude(lu_(i, j)));
    }
    for (int k = 0; k < n; ++k) {
      int piv = -1;
      double best = -1.0;
      for (int i = k; i < n; ++i) {
        if (is_zero(lu_(i, k))) continue;
        double m = pivot_magnitude(lu_(i, k));
        if constexpr (is_exact_v<T>) {
          piv = i;  // any nonzero pivot is exact
          break;
        }
        if (m > best) {
          best = m;
          piv = i;
        }
      }
      if (piv < 0 || (!is_exact_v<T> && best <= singular_tol * scale)) {
        singular_ = true;
        return;
      }
      if (piv != k) {
        for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
        std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(piv)]);
      }
      for (int i = k + 1; i < n; ++i) {
        if (is_zero(lu_(i, k))) continue;
        lu_(i, k) /= lu_(k, k);
        for (int j = k + 1; j < n; ++j) lu_(i, j) -= lu_(i, k) * lu_(k, j);
      }
    }
  }

  bool singular() const { return singular_; }

  std::vector<T> solve(const std::vector<T>& b) const {
    if (singular_) throw NumericError("solve with singular matrix");
    const int n = lu_.rows();
    std::vector<T> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) x[static_cast<std::size_t>(i)] -= lu_(i, j) * x[static_cast<std::size_t>(j)];
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) x[static_cast<std::size_t>(i)] -= lu_(i, j) * x[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(i)] /= lu_(i, i);
    }
    return x;
  }

 private:
  Matrix<T> lu_;
  std::vector<int> perm_;
  bool singular_ = false;
};

template <typename T>
Matrix<T> inverse(const Matrix<T>& a) {
  LuSolver<T> lu(a);
  if (lu.singular()) throw NumericError("matrix is singular");
  const int n = a.rows();
  Matrix<T> inv(n, n);
  for (int j = 0; j < n; ++j) {
    std::vector<T> e(static_cast<std::size_t>(n), T(0));
    e[static_cast<std::size_t>(j)] = T(1);
    auto col = lu.solve(e);
    for (int i = 0; i < n; ++i) inv(i, j) = col[static_cast<std::size_t>(i)];
  }
  return inv;
}

/// Numerical rank via Gaussian elimination with complete pivoting; pivots
/// below rel_tol times the first pivot are treated as zero.
inline int numerical_rank(Matrix<cplx> a, double rel_tol) {
  const int rows = a.rows();
  const int cols = a.cols();
  double first = 0.0;
  int rank = 0;
  for (int k = 0; k < std::min(rows, cols); ++k) {
    int pi = -1;
    int pj = -1;
    double best = 0.0;
    for (int i = k; i < rows; ++i) {
      for (int j = k; j < cols; ++j) {
        if (std::abs(a(i, j)) > best) {
          best = std::abs(a(i, j));
          pi = i;
          pj = j;
        }
      }
    }
    if (k == 0) first = best;
    if (pi < 0 || best <= rel_tol * first || best == 0.0) break;
    for (int j = 0; j < cols; ++j) std::swap(a(k, j), a(pi, j));
    for (int i = 0; i < rows; ++i) std::swap(a(i, k), a(i, pj));
    for (int i = k + 1; i < rows; ++i) {
      cplx f = a(i, k) / a(k, k);
      for (int j = k; j < cols; ++j) a(i, j) -= f * a(k, j);
    }
    ++rank;
  }
  return rank;
}

/// A unit vector spanning (approximately) the kernel of a square matrix with
/// a one-dimensional null space. Uses complete pivoting and back substitution
/// with the free variable set to 1.
inline std::vector<cplx> null_vector(Matrix<cplx> a) {
  const int n = a.rows();
  std::vector<int> col(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) col[static_cast<std::size_t>(j)] = j;
  for (int k = 0; k < n - 1; ++k) {
    int pi = k;
    int pj = k;
    double best = -1.0;
    for (int i = k; i < n; ++i) {
      for (int j = k; j < n; ++j) {
        if (std::abs(a(i, j)) > best) {
          best = std::abs(a(i, j));
          pi = i;
          pj = j;
        }
      }
    }
    for (int j = 0; j < n; ++j) std::swap(a(k, j), a(pi, j));
    for (int i = 0; i < n; ++i) std::swap(a(i, k), a(i, pj));
    std::swap(col[static_cast<std::size_t>(k)], col[static_cast<std::size_t>(pj)]);
    if (best == 0.0) continue;
    for (int i = k + 1; i < n; ++i) {
      cplx f = a(i, k) / a(k, k);
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  // The last pivot is (numerically) zero; the last permuted unknown is free.
  std::vector<cplx> y(static_cast<std::size_t>(n), cplx(0.0, 0.0));
  y[static_cast<std::size_t>(n - 1)] = 1.0;
  for (int i = n - 2; i >= 0; --i) {
    cplx acc = 0.0;
    for (int j = i + 1; j < n; ++j) acc += a(i, j) * y[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = a(i, i) == cplx(0.0, 0.0) ? cplx(0.0, 0.0) : -acc / a(i, i);
  }
  std::vector<cplx> v(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(col[static_cast<std::size_t>(j)])] = y[static_cast<std::size_t>(j)];
  return v;
}

}  // namespace stokeslab
