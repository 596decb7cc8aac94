#pragma once

// Coefficient fields used throughout the library. Every algorithm that only
// needs field arithmetic is templated on the coefficient type so the same code
// runs in floating mode (std::complex<double>) and in exact mode
// (ExactComplex, Gaussian rationals on top of Boost.Multiprecision).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <type_traits>

#include <boost/multiprecision/cpp_int.hpp>

#include "stokeslab/errors.hpp"

namespace stokeslab {

using cplx = std::complex<double>;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

namespace detail {

// Exact value of a finite double as a rational (doubles are dyadic).
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw NonFiniteCoefficient("cannot convert non-finite double");
  if (v == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(v, &exp);  // v = mant * 2^exp, 0.5 <= |mant| < 1
  auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  BigInt num(scaled);
  if (exp >= 0) return Rational(num << exp);
  BigInt den = BigInt(1) << (-exp);
  return Rational(num, den);
}

// Natural log of a positive big integer without overflowing a double.
inline double log_bigint(const BigInt& n) {
  if (n <= 0) return -std::numeric_limits<double>::infinity();
  auto bits = static_cast<long>(boost::multiprecision::msb(n)) + 1;
  if (bits <= 60) return std::log(n.convert_to<double>());
  BigInt top = n >> (bits - 60);
  return std::log(top.convert_to<double>()) + static_cast<double>(bits - 60) * std::log(2.0);
}

inline double log_rational(const Rational& q) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  BigInt num = numerator(q);
  if (num < 0) num = -num;
  return log_bigint(num) - log_bigint(denominator(q));
}

}  // namespace detail

/// Gaussian rational re + i*im with arbitrary-precision parts.
class ExactComplex {
 public:
  ExactComplex() = default;
  ExactComplex(int v) : re_(v) {}  // NOLINT(google-explicit-constructor)
  ExactComplex(Rational re, Rational im = Rational(0)) : re_(std::move(re)), im_(std::move(im)) {}

  static ExactComplex from_cplx(const cplx& c) {
    return {detail::rational_from_double(c.real()), detail::rational_from_double(c.imag())};
  }

  const Rational& real() const { return re_; }
  const Rational& imag() const { return im_; }

  ExactComplex& operator+=(const ExactComplex& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  ExactComplex& operator-=(const ExactComplex& o) {
    re_ -= o.re_;
    im_ -= o.im_;
    return *this;
  }
  ExactComplex& operator*=(const ExactComplex& o) {
    Rational r = re_ * o.re_ - im_ * o.im_;
    Rational i = re_ * o.im_ + im_ * o.re_;
    re_ = std::move(r);
    im_ = std::move(i);
    return *this;
  }
  ExactComplex& operator/=(const ExactComplex& o) {
    Rational den = o.re_ * o.re_ + o.im_ * o.im_;
    if (den == 0) throw std::domain_error("ExactComplex: division by zero");
    Rational r = (re_ * o.re_ + im_ * o.im_) / den;
    Rational i = (im_ * o.re_ - re_ * o.im_) / den;
    re_ = std::move(r);
    im_ = std::move(i);
    return *this;
  }

  friend ExactComplex operator+(ExactComplex a, const ExactComplex& b) { return a += b; }
  friend ExactComplex operator-(ExactComplex a, const ExactComplex& b) { return a -= b; }
  friend ExactComplex operator*(ExactComplex a, const ExactComplex& b) { return a *= b; }
  friend ExactComplex operator/(ExactComplex a, const ExactComplex& b) { return a /= b; }
  friend ExactComplex operator-(const ExactComplex& a) { return {-a.re_, -a.im_}; }
  friend bool operator==(const ExactComplex& a, const ExactComplex& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }
  friend bool operator!=(const ExactComplex& a, const ExactComplex& b) { return !(a == b); }

  friend std::ostream& operator<<(std::ostream& os, const ExactComplex& c) {
    return os << '(' << c.re_ << ',' << c.im_ << ')';
  }

 private:
  Rational re_{0};
  Rational im_{0};
};

// ---------------------------------------------------------------------------
// Field traits. Overloads rather than a traits struct so ADL-free calls read
// naturally at use sites: is_zero(c), to_cplx(c), ...

inline bool is_zero(const cplx& c) { return c == cplx(0.0, 0.0); }
inline bool is_zero(const ExactComplex& c) { return c.real() == 0 && c.imag() == 0; }

inline cplx to_cplx(const cplx& c) { return c; }
inline cplx to_cplx(const ExactComplex& c) {
  return {c.real().convert_to<double>(), c.imag().convert_to<double>()};
}

/// log|c|; -inf for zero. Safe for exact values far outside double range.
inline double log_abs(const cplx& c) { return std::log(std::abs(c)); }
inline double log_abs(const ExactComplex& c) {
  if (is_zero(c)) return -std::numeric_limits<double>::infinity();
  return 0.5 * detail::log_rational(c.real() * c.real() + c.imag() * c.imag());
}

/// Magnitude used for pivot selection.
inline double pivot_magnitude(const cplx& c) { return std::abs(c); }
inline double pivot_magnitude(const ExactComplex& c) {
  return is_zero(c) ? 0.0 : std::exp(log_abs(c));
}

inline bool is_finite(const cplx& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }
inline bool is_finite(const ExactComplex&) { return true; }

template <typename T>
T from_cplx(const cplx& c);
template <>
inline cplx from_cplx<cplx>(const cplx& c) {
  return c;
}
template <>
inline ExactComplex from_cplx<ExactComplex>(const cplx& c) {
  return ExactComplex::from_cplx(c);
}

template <typename T>
T from_int(long v) {
  if constexpr (std::is_same_v<T, cplx>) {
    return cplx(static_cast<double>(v), 0.0);
  } else {
    return T(Rational(v));
  }
}

/// n! in the coefficient field (exact for ExactComplex).
template <typename T>
T factorial(int n) {
  if constexpr (std::is_same_v<T, cplx>) {
    return cplx(std::tgamma(static_cast<double>(n) + 1.0), 0.0);
  } else {
    BigInt f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return T(Rational(f));
  }
}

template <typename T>
inline constexpr bool is_exact_v = std::is_same_v<T, ExactComplex>;

}  // namespace stokeslab
