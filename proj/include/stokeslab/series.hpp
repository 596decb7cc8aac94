#pragma once

// Truncated univariate power series c_0 + c_1 x + ... + c_N x^N and vectors of
// them. Every operation states the order of its result; mixing orders
// truncates to the smaller one.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/scalar.hpp"

namespace stokeslab {

inline constexpr int kDefaultOrder = 64;

/// Valuation of the zero series.
inline constexpr int kInfiniteValuation = std::numeric_limits<int>::max();

template <typename T>
class TruncatedSeries {
 public:
  using value_type = T;

  /// Zero series of the given order.
  explicit TruncatedSeries(int order = 0) : coeffs_(check_order(order) + 1, T(0)) {}

  /// Series with coefficients c_0..c_N; N = coeffs.size() - 1.
  explicit TruncatedSeries(std::vector<T> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw OrderMismatch("a series needs at least one coefficient");
    for (const auto& c : coeffs_) {
      if (!is_finite(c)) throw NonFiniteCoefficient("series coefficient is NaN or infinite");
    }
  }

  static TruncatedSeries constant(const T& c, int order) {
    TruncatedSeries s(order);
    s.coeffs_[0] = c;
    return s;
  }

  /// c * x^k truncated to `order` (zero if k > order).
  static TruncatedSeries monomial(const T& c, int k, int order) {
    TruncatedSeries s(order);
    if (k <= order) s.coeffs_[static_cast<std::size_t>(k)] = c;
    return s;
  }

  static TruncatedSeries variable(int order) { return monomial(T(1), 1, order); }

  int order() const { return static_cast<int>(coeffs_.size()) - 1; }
  std::span<const T> coeffs() const { return coeffs_; }
  const T& operator[](int n) const { return coeffs_[static_cast<std::size_t>(n)]; }
  T& operator[](int n) { return coeffs_[static_cast<std::size_t>(n)]; }

  /// Coefficient n, or zero beyond the truncation order.
  T coeff(int n) const { return n >= 0 && n <= order() ? coeffs_[static_cast<std::size_t>(n)] : T(0); }

  bool is_zero_series() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const T& c) { return is_zero(c); });
  }

  /// Least index with a nonzero coefficient; kInfiniteValuation for zero.
  int valuation() const {
    for (int n = 0; n <= order(); ++n) {
      if (!is_zero(coeffs_[static_cast<std::size_t>(n)])) return n;
    }
    return kInfiniteValuation;
  }

  /// Same coefficients with order reduced (or zero-extended) to `order`.
  TruncatedSeries truncated(int new_order) const {
    TruncatedSeries r(new_order);
    for (int n = 0; n <= std::min(new_order, order()); ++n) r[n] = (*this)[n];
    return r;
  }

  TruncatedSeries operator-() const {
    TruncatedSeries r(order());
    for (int n = 0; n <= order(); ++n) r[n] = -(*this)[n];
    return r;
  }

  friend TruncatedSeries operator+(const TruncatedSeries& a, const TruncatedSeries& b) {
    const int n_out = std::min(a.order(), b.order());
    TruncatedSeries r(n_out);
    for (int n = 0; n <= n_out; ++n) r[n] = a[n] + b[n];
    return r;
  }
  friend TruncatedSeries operator-(const TruncatedSeries& a, const TruncatedSeries& b) {
    const int n_out = std::min(a.order(), b.order());
    TruncatedSeries r(n_out);
    for (int n = 0; n <= n_out; ++n) r[n] = a[n] - b[n];
    return r;
  }

  /// Cauchy product truncated to min(order a, order b).
  friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
    const int n_out = std::min(a.order(), b.order());
    TruncatedSeries r(n_out);
    const int va = a.valuation();
    const int vb = b.valuation();
    if (va == kInfiniteValuation || vb == kInfiniteValuation) return r;
    for (int i = va; i <= n_out; ++i) {
      if (is_zero(a[i])) continue;
      for (int j = vb; i + j <= n_out; ++j) r[i + j] += a[i] * b[j];
    }
    return r;
  }

  friend TruncatedSeries operator*(const T& c, const TruncatedSeries& a) {
    TruncatedSeries r(a.order());
    for (int n = 0; n <= a.order(); ++n) r[n] = c * a[n];
    return r;
  }

  TruncatedSeries& operator+=(const TruncatedSeries& o) { return *this = *this + o; }
  TruncatedSeries& operator-=(const TruncatedSeries& o) { return *this = *this - o; }
  TruncatedSeries& operator*=(const TruncatedSeries& o) { return *this = *this * o; }

  friend bool operator==(const TruncatedSeries& a, const TruncatedSeries& b) {
    return a.coeffs_ == b.coeffs_;
  }

  /// Multiply by x^k keeping the order.
  TruncatedSeries shifted(int k) const {
    TruncatedSeries r(order());
    for (int n = 0; n + k <= order(); ++n) r[n + k] = (*this)[n];
    return r;
  }

  /// Formal derivative; result order N-1 (order 0 stays order 0 with value 0).
  TruncatedSeries derivative() const {
    if (order() == 0) return TruncatedSeries(0);
    TruncatedSeries r(order() - 1);
    for (int n = 1; n <= order(); ++n) r[n - 1] = from_int<T>(n) * (*this)[n];
    return r;
  }

  /// a^e for e >= 0, same order.
  TruncatedSeries pow(int e) const {
    TruncatedSeries result = constant(T(1), order());
    TruncatedSeries base = *this;
    while (e > 0) {
      if (e & 1) result = result * base;
      e >>= 1;
      if (e) base = base * base;
    }
    return result;
  }

  /// Multiplicative inverse; requires a nonzero constant term.
  TruncatedSeries reciprocal() const {
    if (is_zero((*this)[0])) throw ValidationError("reciprocal of a series with zero constant term");
    TruncatedSeries r(order());
    r[0] = T(1) / (*this)[0];
    for (int n = 1; n <= order(); ++n) {
      T acc(0);
      for (int k = 1; k <= n; ++k) acc += (*this)[k] * r[n - k];
      r[n] = -acc / (*this)[0];
    }
    return r;
  }

  /// Horner evaluation of sum_{n<=M} c_n z^n (M clamped to the order).
  template <typename Z>
  Z partial_sum(const Z& z, int max_index) const {
    const int m = std::min(max_index, order());
    Z acc(0);
    for (int n = m; n >= 0; --n) acc = acc * z + convert<Z>((*this)[n]);
    return acc;
  }

  template <typename Z>
  Z evaluate(const Z& z) const {
    return partial_sum(z, order());
  }

 private:
  static int check_order(int order) {
    if (order < 0) throw OrderMismatch("negative truncation order " + std::to_string(order));
    return order;
  }

  template <typename Z>
  static Z convert(const T& c) {
    if constexpr (std::is_same_v<Z, T>) {
      return c;
    } else {
      return Z(to_cplx(c));
    }
  }

  std::vector<T> coeffs_;
};

/// Substitute `inner` into `outer` (Horner accumulation in the series ring).
/// Requires inner(0) == 0; result order min(order outer, order inner).
template <typename T>
TruncatedSeries<T> compose(const TruncatedSeries<T>& outer, const TruncatedSeries<T>& inner) {
  if (!is_zero(inner[0])) {
    throw ComposeConstantTerm("inner series must have zero constant term");
  }
  const int n_out = std::min(outer.order(), inner.order());
  const TruncatedSeries<T> g = inner.truncated(n_out);
  TruncatedSeries<T> acc = TruncatedSeries<T>::constant(outer[n_out], n_out);
  for (int n = n_out - 1; n >= 0; --n) {
    acc = acc * g;
    acc[0] += outer[n];
  }
  return acc;
}

/// k-jet: keeps c_0..c_k, zeroes the rest, order unchanged.
template <typename T>
TruncatedSeries<T> jet(const TruncatedSeries<T>& phi, int k) {
  if (k < 0 || k > phi.order()) {
    throw JetBeyondOrder("k = " + std::to_string(k) + " outside [0, " + std::to_string(phi.order()) + "]");
  }
  TruncatedSeries<T> r(phi.order());
  for (int n = 0; n <= k; ++n) r[n] = phi[n];
  return r;
}

/// (phi - J_k phi) / x^k; result order N - k and zero constant term.
template <typename T>
TruncatedSeries<T> tail(const TruncatedSeries<T>& phi, int k) {
  if (k < 0 || k > phi.order()) {
    throw JetBeyondOrder("k = " + std::to_string(k) + " outside [0, " + std::to_string(phi.order()) + "]");
  }
  TruncatedSeries<T> r(phi.order() - k);
  for (int n = k + 1; n <= phi.order(); ++n) r[n - k] = phi[n];
  return r;
}

template <typename T>
int valuation(const TruncatedSeries<T>& phi) {
  return phi.valuation();
}

template <typename T>
TruncatedSeries<T> differentiate(const TruncatedSeries<T>& phi) {
  return phi.derivative();
}

template <typename T>
cplx partial_sum_eval(const TruncatedSeries<T>& phi, cplx z, int max_index) {
  return phi.partial_sum(z, max_index);
}

// ---------------------------------------------------------------------------

/// r truncated series sharing one order; formal solutions live here.
template <typename T>
class SeriesVec {
 public:
  SeriesVec() = default;

  SeriesVec(int r, int order) : comps_(static_cast<std::size_t>(check_dim(r)), TruncatedSeries<T>(order)) {}

  explicit SeriesVec(std::vector<TruncatedSeries<T>> comps) : comps_(std::move(comps)) {
    check_dim(static_cast<int>(comps_.size()));
    for (const auto& c : comps_) {
      if (c.order() != comps_.front().order()) throw OrderMismatch("SeriesVec components differ in order");
    }
  }

  int dim() const { return static_cast<int>(comps_.size()); }
  int order() const { return comps_.empty() ? -1 : comps_.front().order(); }

  const TruncatedSeries<T>& operator[](int j) const { return comps_[static_cast<std::size_t>(j)]; }
  TruncatedSeries<T>& operator[](int j) { return comps_[static_cast<std::size_t>(j)]; }

  auto begin() const { return comps_.begin(); }
  auto end() const { return comps_.end(); }

  template <typename F>
  SeriesVec map(F&& f) const {
    std::vector<TruncatedSeries<T>> out;
    out.reserve(comps_.size());
    for (const auto& c : comps_) out.push_back(f(c));
    return SeriesVec(std::move(out));
  }

  SeriesVec truncated(int order) const {
    return map([order](const TruncatedSeries<T>& s) { return s.truncated(order); });
  }

  /// Componentwise evaluation of the partial sums through index M.
  std::vector<cplx> partial_sum(cplx z, int max_index) const {
    std::vector<cplx> out;
    out.reserve(comps_.size());
    for (const auto& c : comps_) out.push_back(c.partial_sum(z, max_index));
    return out;
  }

  friend bool operator==(const SeriesVec& a, const SeriesVec& b) { return a.comps_ == b.comps_; }

 private:
  static int check_dim(int r) {
    if (r < 1) throw OrderMismatch("SeriesVec needs at least one component");
    return r;
  }

  std::vector<TruncatedSeries<T>> comps_;
};

template <typename T>
SeriesVec<T> jet(const SeriesVec<T>& v, int k) {
  return v.map([k](const TruncatedSeries<T>& s) { return jet(s, k); });
}

template <typename T>
SeriesVec<T> tail(const SeriesVec<T>& v, int k) {
  return v.map([k](const TruncatedSeries<T>& s) { return tail(s, k); });
}

/// Coefficientwise conversion between coefficient fields.
template <typename To, typename From>
TruncatedSeries<To> convert_series(const TruncatedSeries<From>& s) {
  std::vector<To> out;
  out.reserve(static_cast<std::size_t>(s.order() + 1));
  for (const auto& c : s.coeffs()) {
    if constexpr (std::is_same_v<To, From>) {
      out.push_back(c);
    } else {
      out.push_back(from_cplx<To>(to_cplx(c)));
    }
  }
  return TruncatedSeries<To>(std::move(out));
}

template <typename To, typename From>
SeriesVec<To> convert_series(const SeriesVec<From>& v) {
  std::vector<TruncatedSeries<To>> out;
  for (const auto& c : v) out.push_back(convert_series<To>(c));
  return SeriesVec<To>(std::move(out));
}

}  // namespace stokeslab
