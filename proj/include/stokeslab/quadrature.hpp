#pragma once

// Tanh-sinh (double exponential) quadrature for complex-valued integrands on a
// finite interval. Nodes near the endpoints are generated from the distance
// to the endpoint so that integrable endpoint singularities and very short
// intervals keep full relative accuracy.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>

#include "stokeslab/scalar.hpp"

namespace stokeslab {

struct QuadratureOptions {
  double rel_tol = 1e-14;
  double abs_tol = 0.0;
  int min_level = 3;
  int max_level = 12;
};

struct QuadratureResult {
  cplx value;
  double est_error = 0.0;  ///< |I_k - I_{k-1}| of the last two levels
  double l1_norm = 0.0;    ///< approximation of the integral of |f|, for rounding estimates
  int evaluations = 0;
  int levels = 0;
};

namespace detail {

// Half-width of the u window: beyond it the weights are below 1e-300 or the
// nodes coincide with the endpoints in double precision.
inline constexpr double kTanhSinhUMax = 6.5;

}  // namespace detail

/// Integral of f over [a, b]. `f` receives the abscissa together with its
/// distances to both endpoints (exact even when they are below eps * |b - a|).
inline QuadratureResult tanh_sinh(const std::function<cplx(double x, double from_a, double from_b)>& f, double a,
                                  double b, const QuadratureOptions& opt = {}) {
  QuadratureResult res;
  const double half = 0.5 * (b - a);
  if (half == 0.0) {
    res.value = 0.0;
    return res;
  }
  cplx sum(0.0, 0.0);
  double abs_sum = 0.0;

  // Sum of weighted samples at u = k h for the k selected by `stride` / `offset`.
  auto accumulate = [&](double h, int offset, int stride) {
    cplx s(0.0, 0.0);
    double s_abs = 0.0;
    for (int k = offset;; k += stride) {
      const double u = k * h;
      if (u > detail::kTanhSinhUMax) break;
      const double v = 0.5 * kPi * std::sinh(u);
      const double cv = std::cosh(v);
      const double w = 0.5 * kPi * std::cosh(u) / (cv * cv);
      if (w * half < 1e-300 && k > 0) break;
      // distance from the nearer endpoint: half * (1 - tanh v) = half * e^{-v} / cosh v
      const double near = half * std::exp(-v) / cv;
      const double far = 2.0 * half - near;
      for (int side = (k == 0 ? 0 : -1); side <= (k == 0 ? 0 : 1); side += 2) {
        double from_a;
        double from_b;
        if (k == 0) {
          from_a = half;
          from_b = half;
        } else if (side < 0) {
          from_a = near;
          from_b = far;
        } else {
          from_a = far;
          from_b = near;
        }
        if (from_a <= 0.0 || from_b <= 0.0) continue;
        const double x = side < 0 || k == 0 ? a + from_a : b - from_b;
        const cplx fx = f(x, from_a, from_b);
        ++res.evaluations;
        if (!is_finite(fx)) continue;  // endpoint overflow of a decaying integrand
        s += w * fx;
        s_abs += w * std::abs(fx);
      }
    }
    return std::pair<cplx, double>{s, s_abs};
  };

  double h = 1.0;
  {
    auto [s, sa] = accumulate(h, 0, 1);
    sum = s;
    abs_sum = sa;
  }
  cplx prev = sum * h * half;
  res.value = prev;
  for (int level = 1; level <= opt.max_level; ++level) {
    h *= 0.5;
    auto [s, sa] = accumulate(h, 1, 2);  // odd multiples of the new step
    sum += s;
    abs_sum += sa;
    const cplx cur = sum * h * half;
    res.est_error = std::abs(cur - prev);
    res.value = cur;
    res.levels = level;
    res.l1_norm = abs_sum * h * std::abs(half);
    if (level >= opt.min_level && res.est_error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(cur))) break;
    prev = cur;
  }
  return res;
}

/// Convenience overload for integrands that only need the abscissa.
inline QuadratureResult tanh_sinh(const std::function<cplx(double)>& f, double a, double b,
                                  const QuadratureOptions& opt = {}) {
  return tanh_sinh([&f](double x, double, double) { return f(x); }, a, b, opt);
}

}  // namespace stokeslab
