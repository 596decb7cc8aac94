#pragma once

// Systems x^(p+1) y' = A(x, y) with polynomial right-hand side, their unique
// formal solution, the spectrum of the linear part, singular directions and
// the derived tail and flow systems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/linalg.hpp"
#include "stokeslab/mpoly.hpp"
#include "stokeslab/roots.hpp"
#include "stokeslab/scalar.hpp"
#include "stokeslab/series.hpp"

namespace stokeslab {

/// x^(p+1) y' = A(x, y). Component i of A is a polynomial in the variables
/// (x, y_1, ..., y_r), stored with x at index 0.
template <typename T = cplx>
class OdeSystem {
 public:
  OdeSystem(int p, int r, std::vector<MPoly<T>> rhs) : p_(p), r_(r), rhs_(std::move(rhs)) {
    if (p_ < 1) throw InvalidSystem("Poincare rank p must be >= 1, got " + std::to_string(p_));
    if (r_ < 1) throw InvalidSystem("dimension r must be >= 1, got " + std::to_string(r_));
    if (static_cast<int>(rhs_.size()) != r_) throw InvalidSystem("need one right-hand side per component");
    const Exponents origin(static_cast<std::size_t>(r_ + 1), 0);
    for (const auto& a : rhs_) {
      if (a.nvars() != r_ + 1) throw InvalidSystem("right-hand side must be a polynomial in (x, y_1..y_r)");
      if (!is_zero(a.coeff(origin))) throw InvalidSystem("A(0,0) must vanish");
    }
  }

  int p() const { return p_; }
  int r() const { return r_; }
  const std::vector<MPoly<T>>& rhs() const { return rhs_; }
  const MPoly<T>& rhs(int i) const { return rhs_[static_cast<std::size_t>(i)]; }

  template <typename To>
  OdeSystem<To> convert() const {
    std::vector<MPoly<To>> out;
    for (const auto& a : rhs_) out.push_back(a.template convert<To>());
    return OdeSystem<To>(p_, r_, std::move(out));
  }

  /// A(x, y) at a complex point.
  std::vector<cplx> evaluate(cplx x, std::span<const cplx> y) const {
    std::vector<cplx> point(static_cast<std::size_t>(r_ + 1));
    point[0] = x;
    std::copy(y.begin(), y.end(), point.begin() + 1);
    std::vector<cplx> out;
    out.reserve(rhs_.size());
    for (const auto& a : rhs_) out.push_back(a.evaluate(point));
    return out;
  }

  /// A(x, y + d) - A(x, y) evaluated without forming either term, so the
  /// result keeps full relative accuracy when |d| << |y|.
  std::vector<cplx> evaluate_difference(cplx x, std::span<const cplx> y, std::span<const cplx> d) const {
    std::vector<cplx> out(static_cast<std::size_t>(r_), cplx(0.0, 0.0));
    std::vector<int> factors;
    for (int i = 0; i < r_; ++i) {
      for (const auto& [e, c] : rhs_[static_cast<std::size_t>(i)].terms()) {
        factors.clear();
        for (int v = 1; v <= r_; ++v) {
          for (int k = 0; k < e[static_cast<std::size_t>(v)]; ++k) factors.push_back(v - 1);
        }
        if (factors.empty()) continue;
        cplx xpow = to_cplx(c);
        for (int k = 0; k < e[0]; ++k) xpow *= x;
        // prod(u_k) - prod(v_k) = sum_k (u_k - v_k) prod_{j<k} u_j prod_{j>k} v_j
        cplx acc = 0.0;
        for (std::size_t k = 0; k < factors.size(); ++k) {
          cplx term = d[static_cast<std::size_t>(factors[k])];
          for (std::size_t j = 0; j < factors.size(); ++j) {
            if (j == k) continue;
            const auto idx = static_cast<std::size_t>(factors[j]);
            term *= j < k ? y[idx] + d[idx] : y[idx];
          }
          acc += term;
        }
        out[static_cast<std::size_t>(i)] += xpow * acc;
      }
    }
    return out;
  }

  /// A(x, Y(x)) as truncated series of the given order.
  SeriesVec<T> evaluate(const SeriesVec<T>& y, int order) const {
    std::vector<TruncatedSeries<T>> args;
    args.push_back(TruncatedSeries<T>::variable(order));
    for (int j = 0; j < r_; ++j) args.push_back(y[j].truncated(order));
    std::vector<TruncatedSeries<T>> out;
    for (const auto& a : rhs_) out.push_back(a.evaluate(std::span<const TruncatedSeries<T>>(args), order));
    return SeriesVec<T>(std::move(out));
  }

 private:
  int p_;
  int r_;
  std::vector<MPoly<T>> rhs_;
};

/// d A / d y at the origin: the coefficients of the monomials y_j (no x).
template <typename T>
Matrix<T> linear_part(const OdeSystem<T>& sys) {
  const int r = sys.r();
  Matrix<T> a0(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      Exponents e(static_cast<std::size_t>(r + 1), 0);
      e[static_cast<std::size_t>(j + 1)] = 1;
      a0(i, j) = sys.rhs(i).coeff(e);
    }
  }
  return a0;
}

// ---------------------------------------------------------------------------
// Spectrum and singular directions

/// Eigenvalues of A_0 ordered by argument in [0, 2pi), then by modulus.
struct Spectrum {
  std::vector<cplx> eigenvalues;
  Matrix<cplx> source;
};

/// Principal argument mapped into [0, 2pi).
inline double arg_0_2pi(cplx z) {
  double a = std::arg(z);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

/// Angle reduced into [0, 2pi).
inline double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t -= kTwoPi;
  return t;
}

/// Distance between two angles on the circle, in [0, pi].
inline double angular_distance(double a, double b) {
  double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

inline Spectrum eigenvalues(const Matrix<cplx>& a0) {
  if (a0.rows() != a0.cols()) throw ValidationError("eigenvalues of a non-square matrix");
  if (a0.rows() > 8) throw ValidationError("eigenvalue routine is limited to r <= 8");
  Spectrum s{polynomial_roots(characteristic_polynomial(a0)), a0};
  // Snap negligible parts so exactly real or imaginary eigenvalues sort and
  // compare deterministically.
  double scale = 1.0;
  for (const auto& l : s.eigenvalues) scale = std::max(scale, std::abs(l));
  for (auto& l : s.eigenvalues) {
    if (std::abs(l.imag()) < 1e-13 * scale) l.imag(0.0);
    if (std::abs(l.real()) < 1e-13 * scale) l.real(0.0);
  }
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), [](cplx a, cplx b) {
    double aa = arg_0_2pi(a);
    double ab = arg_0_2pi(b);
    if (aa != ab) return aa < ab;
    return std::abs(a) < std::abs(b);
  });
  return s;
}

struct DistinctArgumentCheck {
  bool holds = false;
  bool zero_eigenvalue = false;
  std::string reason;
};

inline constexpr double kArgumentTolerance = 1e-9;

/// Condition (DA): all eigenvalues nonzero with pairwise distinct arguments
/// modulo 2pi. Ties within kArgumentTolerance count as failure.
inline DistinctArgumentCheck check_distinct_arguments(const Spectrum& s) {
  DistinctArgumentCheck out;
  double scale = 1.0;
  for (const auto& l : s.eigenvalues) scale = std::max(scale, std::abs(l));
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    if (std::abs(s.eigenvalues[i]) <= 1e-12 * scale) {
      out.zero_eigenvalue = true;
      out.reason = "eigenvalue " + std::to_string(i) + " is zero";
      return out;
    }
  }
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    for (std::size_t j = i + 1; j < s.eigenvalues.size(); ++j) {
      if (angular_distance(std::arg(s.eigenvalues[i]), std::arg(s.eigenvalues[j])) <= kArgumentTolerance) {
        out.reason = "eigenvalues " + std::to_string(i) + " and " + std::to_string(j) + " share an argument";
        return out;
      }
    }
  }
  out.holds = true;
  return out;
}

/// Right eigenvector of A_0 for eigenvalue lambda, scaled so that its first
/// largest-modulus component equals 1. Real matrices therefore give
/// conjugate eigenvectors for conjugate eigenvalues.
inline std::vector<cplx> eigenvector(const Matrix<cplx>& a0, cplx lambda) {
  Matrix<cplx> m = a0;
  for (int i = 0; i < m.rows(); ++i) m(i, i) -= lambda;
  auto v = null_vector(m);
  double best = 0.0;
  for (const auto& c : v) best = std::max(best, std::abs(c));
  for (const auto& c : v) {
    if (std::abs(c) >= best * (1.0 - 1e-9)) {
      cplx pivot = c;
      for (auto& x : v) x /= pivot;
      break;
    }
  }
  return v;
}

struct SingularDirection {
  double theta = 0.0;  ///< radians in [0, 2pi)
  int eigen_index = 0;  ///< index into SingularDirectionTable::eigenvalues
  int sheet = 0;        ///< l in p*theta = arg(lambda) + 2 pi l
};

/// Sorted singular directions. With eigenvalues ordered by argument, entry l
/// belongs to eigenvalue l mod r.
struct SingularDirectionTable {
  int p = 1;
  std::vector<cplx> eigenvalues;
  std::vector<SingularDirection> entries;

  int size() const { return static_cast<int>(entries.size()); }

  /// theta_l for any integer l, continued periodically with period 2pi.
  double theta(int l) const {
    const int n = size();
    int q = l >= 0 ? l / n : -((-l + n - 1) / n);
    int idx = l - q * n;
    return entries[static_cast<std::size_t>(idx)].theta + kTwoPi * q;
  }

  const SingularDirection& entry(int l) const {
    const int n = size();
    return entries[static_cast<std::size_t>(((l % n) + n) % n)];
  }

  /// Angular gap from direction l to its nearest neighbouring direction
  /// (2pi when it is the only one).
  double gap(int l) const {
    if (size() == 1) return kTwoPi;
    return std::min(theta(l + 1) - theta(l), theta(l) - theta(l - 1));
  }
};

inline SingularDirectionTable singular_directions(int p, const Spectrum& spectrum) {
  if (!check_distinct_arguments(spectrum).holds) {
    throw ValidationError("singular directions need eigenvalues with distinct nonzero arguments");
  }
  SingularDirectionTable table;
  table.p = p;
  table.eigenvalues = spectrum.eigenvalues;
  for (std::size_t j = 0; j < spectrum.eigenvalues.size(); ++j) {
    const double base = arg_0_2pi(spectrum.eigenvalues[j]);
    for (int l = 0; l < p; ++l) {
      table.entries.push_back({wrap_angle((base + kTwoPi * l) / p), static_cast<int>(j), l});
    }
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const SingularDirection& a, const SingularDirection& b) { return a.theta < b.theta; });
  return table;
}

// ---------------------------------------------------------------------------
// Formal solution

/// The unique formal solution H with H(0) = 0 through order N, computed
/// order by order from A_0 h_n = (n - p) h_{n-p} - [x^n] A(x, J_{n-1} H).
template <typename T>
SeriesVec<T> formal_solution(const OdeSystem<T>& sys, int order) {
  if (order < 1) throw ValidationError("formal solution order must be >= 1");
  const int r = sys.r();
  const int p = sys.p();
  LuSolver<T> lu(linear_part(sys), 1e-12);
  if (lu.singular()) throw SingularLinearPart("A_0 is not invertible");

  SeriesVec<T> h(r, order);
  for (int n = 1; n <= order; ++n) {
    std::vector<T> rhs(static_cast<std::size_t>(r), T(0));
    for (int i = 0; i < r; ++i) {
      T& out = rhs[static_cast<std::size_t>(i)];
      if (n - p >= 1) out = from_int<T>(n - p) * h[i][n - p];
      for (const auto& [e, c] : sys.rhs(i).terms()) {
        const int xa = e[0];
        int ydeg = 0;
        for (int v = 1; v <= r; ++v) ydeg += e[static_cast<std::size_t>(v)];
        const int target = n - xa;
        if (target < 0) continue;
        if (ydeg == 0) {
          if (target == 0) out -= c;
          continue;
        }
        if (ydeg == 1) {
          if (xa == 0) continue;  // A_0 h_n, the unknown
          for (int v = 1; v <= r; ++v) {
            if (e[static_cast<std::size_t>(v)] == 1) out -= c * h[v - 1].coeff(target);
          }
          continue;
        }
        // Nonlinear monomial: every factor has valuation >= 1 so only
        // h_1..h_{n-1} contribute to x^target with target <= n - 1.
        TruncatedSeries<T> prod = TruncatedSeries<T>::constant(T(1), target);
        for (int v = 1; v <= r; ++v) {
          for (int k = 0; k < e[static_cast<std::size_t>(v)]; ++k) prod = prod * h[v - 1].truncated(target);
        }
        out -= c * prod[target];
      }
    }
    auto hn = lu.solve(rhs);
    for (int i = 0; i < r; ++i) h[i][n] = hn[static_cast<std::size_t>(i)];
  }
  return h;
}

/// x^(p+1) H' - A(x, H) through the order of H.
template <typename T>
SeriesVec<T> residual(const OdeSystem<T>& sys, const SeriesVec<T>& h) {
  const int order = h.order();
  SeriesVec<T> a = sys.evaluate(h, order);
  std::vector<TruncatedSeries<T>> out;
  for (int i = 0; i < sys.r(); ++i) {
    TruncatedSeries<T> lhs(order);
    for (int n = sys.p() + 1; n <= order; ++n) lhs[n] = from_int<T>(n - sys.p()) * h[i][n - sys.p()];
    out.push_back(lhs - a[i]);
  }
  return SeriesVec<T>(std::move(out));
}

// ---------------------------------------------------------------------------
// Derived systems

namespace detail {

template <typename T>
MPoly<T> univariate_as_mpoly(const TruncatedSeries<T>& s, int nvars, int var, int max_index) {
  MPoly<T> out(nvars);
  for (int n = 0; n <= std::min(max_index, s.order()); ++n) {
    Exponents e(static_cast<std::size_t>(nvars), 0);
    e[static_cast<std::size_t>(var)] = n;
    out.add_term(std::move(e), s[n]);
  }
  return out;
}

template <typename T>
double coefficient_scale(const std::vector<MPoly<T>>& polys) {
  double s = 1.0;
  for (const auto& p : polys) {
    for (const auto& [e, c] : p.terms()) s = std::max(s, std::abs(to_cplx(c)));
  }
  return s;
}

}  // namespace detail

/// System solved by T_k H: substitute y = J_k H + x^k w, subtract
/// x^(p+1) (J_k H)', divide by x^k and add -k x^p w. `h` must be the formal
/// solution of `sys` to order >= k.
template <typename T>
OdeSystem<T> tail_system(const OdeSystem<T>& sys, const SeriesVec<T>& h, int k) {
  if (k < 0) throw ValidationError("tail index must be >= 0");
  if (k == 0) return sys;
  if (h.order() < k) throw InsufficientOrder("formal solution order below tail index");
  const int r = sys.r();
  const int p = sys.p();
  const int nv = r + 1;

  std::vector<MPoly<T>> images;
  images.push_back(MPoly<T>::variable(nv, 0));
  for (int j = 0; j < r; ++j) {
    MPoly<T> img = detail::univariate_as_mpoly(h[j], nv, 0, k);
    Exponents e(static_cast<std::size_t>(nv), 0);
    e[0] = k;
    e[static_cast<std::size_t>(j + 1)] = 1;
    img.add_term(std::move(e), T(1));
    images.push_back(std::move(img));
  }

  std::vector<MPoly<T>> raw;
  for (int i = 0; i < r; ++i) {
    MPoly<T> sub = sys.rhs(i).substitute(std::span<const MPoly<T>>(images), Truncation{});
    // x^(p+1) (J_k H_i)' = sum_{n<=k} n h_n x^(n+p)
    for (int n = 1; n <= k; ++n) {
      Exponents e(static_cast<std::size_t>(nv), 0);
      e[0] = n + p;
      sub.add_term(std::move(e), -(from_int<T>(n) * h[i][n]));
    }
    raw.push_back(std::move(sub));
  }

  const double scale = detail::coefficient_scale(raw);
  std::vector<MPoly<T>> out;
  for (int i = 0; i < r; ++i) {
    MPoly<T> shifted(nv);
    for (const auto& [e, c] : raw[static_cast<std::size_t>(i)].terms()) {
      if (e[0] < k) {
        if constexpr (is_exact_v<T>) {
          throw DivisibilityFailure("term x^" + std::to_string(e[0]) + " survives in component " + std::to_string(i));
        } else {
          if (std::abs(c) > 1e-9 * scale) {
            throw DivisibilityFailure("term x^" + std::to_string(e[0]) + " survives in component " +
                                      std::to_string(i));
          }
          continue;
        }
      }
      Exponents f = e;
      f[0] -= k;
      shifted.add_term(std::move(f), c);
    }
    Exponents ew(static_cast<std::size_t>(nv), 0);
    ew[0] = p;
    ew[static_cast<std::size_t>(i + 1)] = 1;
    shifted.add_term(std::move(ew), -from_int<T>(k));
    out.push_back(std::move(shifted));
  }
  return OdeSystem<T>(p, r, std::move(out));
}

/// Truncation orders for the formal flow B(z, x, w).
struct FlowOrders {
  int z = 10;
  int x = 10;
  int w = 10;  ///< total degree in (w_1..w_r)
};

/// Formal flow B(z, x, w) of dw/dz = (1 + x^p z)^(-p-1) A(x + x^(p+1) z, w),
/// B(0, x, w) = w. Component polynomials use variables (z, x, w_1..w_r).
template <typename T>
struct FormalFlow {
  int p = 1;
  int r = 1;
  FlowOrders orders;
  std::vector<MPoly<T>> components;

  Truncation truncation() const {
    return group_degree_cap(2, 2 + r, orders.w, per_variable_caps({orders.z, orders.x}));
  }
};

template <typename T>
FormalFlow<T> formal_flow(const OdeSystem<T>& sys, FlowOrders orders) {
  const int r = sys.r();
  const int p = sys.p();
  const int nv = r + 2;
  FormalFlow<T> flow{p, r, orders, {}};
  const Truncation keep = flow.truncation();

  for (int j = 0; j < r; ++j) flow.components.push_back(MPoly<T>::variable(nv, 2 + j).truncated(keep));

  // x + x^(p+1) z, and (1 + x^p z)^(-p-1) = sum_k (-1)^k C(p+k, k) x^(pk) z^k
  MPoly<T> shifted_x(nv);
  {
    Exponents e(static_cast<std::size_t>(nv), 0);
    e[1] = 1;
    shifted_x.add_term(e, T(1));
    e[0] = 1;
    e[1] = p + 1;
    shifted_x.add_term(std::move(e), T(1));
  }
  MPoly<T> jacobian_factor(nv);
  {
    BigInt binom = 1;  // C(p+k, k)
    for (int k = 0; k <= orders.z; ++k) {
      if (k > 0) binom = binom * (p + k) / k;
      Exponents e(static_cast<std::size_t>(nv), 0);
      e[0] = k;
      e[1] = p * k;
      T c;
      if constexpr (is_exact_v<T>) {
        c = T(Rational(binom));
      } else {
        c = T(binom.convert_to<double>());
      }
      jacobian_factor.add_term(std::move(e), k % 2 == 0 ? c : -c);
    }
    jacobian_factor = jacobian_factor.truncated(keep);
  }

  for (int m = 0; m < orders.z; ++m) {
    const Truncation keep_m = [&keep, m](const Exponents& e) { return e[0] <= m && keep(e); };
    std::vector<MPoly<T>> images;
    images.push_back(shifted_x);
    for (const auto& b : flow.components) images.push_back(b);
    for (int j = 0; j < r; ++j) {
      MPoly<T> a = sys.rhs(j).substitute(std::span<const MPoly<T>>(images), keep_m);
      MPoly<T> rate = MPoly<T>::multiply(jacobian_factor, a, keep_m);
      const T inv = T(1) / from_int<T>(m + 1);
      for (const auto& [e, c] : rate.terms()) {
        if (e[0] != m) continue;
        Exponents f = e;
        f[0] = m + 1;
        if (keep(f)) flow.components[static_cast<std::size_t>(j)].add_term(std::move(f), c * inv);
      }
    }
  }
  return flow;
}

/// B(z, x, H(x)) - H(x + x^(p+1) z) as polynomials in (z, x), keeping total
/// degree <= `total_degree`. Identically zero when the flow orders suffice.
template <typename T>
std::vector<MPoly<T>> formal_flow_defect(const FormalFlow<T>& flow, const SeriesVec<T>& h, int total_degree) {
  const int r = flow.r;
  const int p = flow.p;
  const Truncation keep = [total_degree](const Exponents& e) { return e[0] + e[1] <= total_degree; };

  std::vector<MPoly<T>> images;
  images.push_back(MPoly<T>::variable(2, 0));
  images.push_back(MPoly<T>::variable(2, 1));
  for (int j = 0; j < r; ++j) images.push_back(detail::univariate_as_mpoly(h[j], 2, 1, total_degree));

  // x + x^(p+1) z
  MPoly<T> arg(2);
  arg.add_term({0, 1}, T(1));
  arg.add_term({1, p + 1}, T(1));

  std::vector<MPoly<T>> out;
  for (int j = 0; j < r; ++j) {
    MPoly<T> lhs = flow.components[static_cast<std::size_t>(j)].substitute(std::span<const MPoly<T>>(images), keep);
    MPoly<T> rhs(2);
    MPoly<T> power = MPoly<T>::constant(2, T(1));
    for (int n = 1; n <= std::min(total_degree, h.order()); ++n) {
      power = MPoly<T>::multiply(power, arg, keep);
      rhs += h[j][n] * power;
    }
    out.push_back(lhs - rhs);
  }
  return out;
}

}  // namespace stokeslab
