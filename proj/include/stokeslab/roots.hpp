#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/linalg.hpp"
#include "stokeslab/scalar.hpp"

namespace stokeslab {

struct PolyRootOptions {
  double tol = 1e-12;
  int max_iter = 500;
};

/// All roots (with multiplicity) of sum_k coeffs[k] t^k by Aberth-Ehrlich
/// simultaneous iteration. Trailing (highest-degree) zero coefficients are
/// ignored; a zero polynomial has no roots.
inline std::vector<cplx> polynomial_roots(std::vector<cplx> coeffs, PolyRootOptions opt = {}) {
  while (!coeffs.empty() && coeffs.back() == cplx(0.0, 0.0)) coeffs.pop_back();
  if (coeffs.size() <= 1) return {};
  const int deg = static_cast<int>(coeffs.size()) - 1;
  const cplx lead = coeffs.back();
  for (auto& c : coeffs) c /= lead;

  // Cauchy-type bound for the initial circle.
  double radius = 0.0;
  for (int k = 0; k < deg; ++k) radius = std::max(radius, std::pow(std::abs(coeffs[static_cast<std::size_t>(k)]), 1.0 / (deg - k)));
  radius = std::max(radius, 1e-3);

  std::vector<cplx> z(static_cast<std::size_t>(deg));
  for (int k = 0; k < deg; ++k) {
    double ang = kTwoPi * k / deg + 0.4;
    z[static_cast<std::size_t>(k)] = std::polar(radius, ang);
  }

  auto eval = [&](cplx t, cplx& p, cplx& dp) {
    p = coeffs.back();
    dp = 0.0;
    for (int k = deg - 1; k >= 0; --k) {
      dp = dp * t + p;
      p = p * t + coeffs[static_cast<std::size_t>(k)];
    }
  };

  for (int it = 0; it < opt.max_iter; ++it) {
    double max_step = 0.0;
    for (int i = 0; i < deg; ++i) {
      cplx p;
      cplx dp;
      cplx& zi = z[static_cast<std::size_t>(i)];
      eval(zi, p, dp);
      if (p == cplx(0.0, 0.0)) continue;
      cplx ratio = p / dp;
      cplx sum = 0.0;
      for (int j = 0; j < deg; ++j) {
        if (j != i) sum += 1.0 / (zi - z[static_cast<std::size_t>(j)]);
      }
      cplx step = ratio / (1.0 - ratio * sum);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) step = ratio;
      zi -= step;
      max_step = std::max(max_step, std::abs(step) / std::max(1.0, std::abs(zi)));
    }
    if (max_step < opt.tol) break;
  }
  return z;
}

/// Characteristic polynomial det(t I - A) coefficients (ascending) via
/// Faddeev-LeVerrier.
inline std::vector<cplx> characteristic_polynomial(const Matrix<cplx>& a) {
  const int n = a.rows();
  std::vector<cplx> c(static_cast<std::size_t>(n + 1), cplx(0.0, 0.0));
  c[static_cast<std::size_t>(n)] = 1.0;
  Matrix<cplx> m(n, n);
  for (int k = 1; k <= n; ++k) {
    Matrix<cplx> next = a * m;
    for (int i = 0; i < n; ++i) next(i, i) += c[static_cast<std::size_t>(n - k + 1)];
    Matrix<cplx> am = a * next;
    cplx trace = 0.0;
    for (int i = 0; i < n; ++i) trace += am(i, i);
    c[static_cast<std::size_t>(n - k)] = -trace / static_cast<double>(k);
    m = next;
  }
  return c;
}

}  // namespace stokeslab
