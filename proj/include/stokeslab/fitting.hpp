#pragma once

// Small least-squares fits: linear models in a handful of basis functions and
// the exponential-order model log|f(x)| ~ c - a x^(-k).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "stokeslab/errors.hpp"

namespace stokeslab {

struct LinearFit {
  std::vector<double> coeffs;
  double rms_residual = 0.0;
  std::vector<double> residuals;
};

/// min ||X c - y||_2 by modified Gram-Schmidt QR. `columns` holds the basis
/// functions sampled at the data points.
inline LinearFit least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y) {
  const std::size_t m = y.size();
  const std::size_t n = columns.size();
  if (n == 0 || m < n) throw FitDiverged("least squares needs at least as many samples as parameters");
  for (const auto& c : columns) {
    if (c.size() != m) throw ValidationError("least squares column has wrong length");
  }
  std::vector<std::vector<double>> q = columns;
  std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double orig = 0.0;
    for (double v : columns[j]) orig += v * v;
    for (std::size_t i = 0; i < j; ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < m; ++k) d += q[i][k] * q[j][k];
      r[i][j] = d;
      for (std::size_t k = 0; k < m; ++k) q[j][k] -= d * q[i][k];
    }
    double norm = 0.0;
    for (double v : q[j]) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 1e-12 * std::sqrt(orig))) throw FitDiverged("least squares basis is rank deficient");
    r[j][j] = norm;
    for (double& v : q[j]) v /= norm;
  }
  std::vector<double> qty(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < m; ++k) qty[j] += q[j][k] * y[k];
  }
  LinearFit fit;
  fit.coeffs.assign(n, 0.0);
  for (std::size_t jj = n; jj-- > 0;) {
    double s = qty[jj];
    for (std::size_t i = jj + 1; i < n; ++i) s -= r[jj][i] * fit.coeffs[i];
    fit.coeffs[jj] = s / r[jj][jj];
  }
  double ss = 0.0;
  fit.residuals.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    double pred = 0.0;
    for (std::size_t j = 0; j < n; ++j) pred += columns[j][k] * fit.coeffs[j];
    fit.residuals[k] = y[k] - pred;
    ss += fit.residuals[k] * fit.residuals[k];
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(m));
  for (double c : fit.coeffs) {
    if (!std::isfinite(c)) throw FitDiverged("least squares produced a non-finite coefficient");
  }
  return fit;
}

/// Candidate exponents k for the model c - a x^(-k).
inline const std::vector<double>& default_order_candidates() {
  static const std::vector<double> k{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  return k;
}

struct ExponentialOrderFit {
  double a = 0.0;  ///< rate
  double k = 0.0;  ///< exponent of 1/x
  double c = 0.0;  ///< log prefactor
  double power = 0.0;  ///< coefficient of log x, zero unless requested
  double rms_residual = 0.0;
  std::vector<double> residuals;  ///< log|f| minus the model, per sample
};

/// Fit log|f(x_i)| ~ c - a x_i^(-k) over the candidate k; picks the k with
/// the smallest residual. With `with_power` the model gains a term
/// power * log x. Requires >= 8 positive samples spanning a factor of at
/// least 4 in x.
inline ExponentialOrderFit exp_order_fit(const std::vector<double>& x, const std::vector<double>& magnitude,
                                         const std::vector<double>& candidates = default_order_candidates(),
                                         bool with_power = false) {
  if (x.size() != magnitude.size()) throw ValidationError("sample and value counts differ");
  std::vector<double> xs;
  std::vector<double> logs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && magnitude[i] > 0.0 && std::isfinite(magnitude[i])) {
      xs.push_back(x[i]);
      logs.push_back(std::log(magnitude[i]));
    }
  }
  if (xs.size() < 8) throw FitDiverged("exponential-order fit needs >= 8 positive samples");
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*hi < 4.0 * *lo) throw FitDiverged("exponential-order fit needs samples spanning a factor >= 4");

  ExponentialOrderFit best;
  best.rms_residual = std::numeric_limits<double>::infinity();
  std::vector<double> ones(xs.size(), 1.0);
  std::vector<double> log_x(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) log_x[i] = std::log(xs[i]);
  for (double k : candidates) {
    std::vector<double> basis(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) basis[i] = -std::pow(xs[i], -k);
    LinearFit f = with_power ? least_squares({ones, basis, log_x}, logs) : least_squares({ones, basis}, logs);
    if (f.rms_residual < best.rms_residual) {
      best.c = f.coeffs[0];
      best.a = f.coeffs[1];
      best.power = with_power ? f.coeffs[2] : 0.0;
      best.k = k;
      best.rms_residual = f.rms_residual;
      best.residuals = f.residuals;
    }
  }
  return best;
}

/// Slope of y against x by ordinary least squares.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> ones(x.size(), 1.0);
  return least_squares({ones, x}, y).coeffs[1];
}

}  // namespace stokeslab
