#pragma once

// Borel-Laplace resummation of order p: formal Borel transform, Gevrey-order
// estimation, analytic continuation of the Borel series (Pade, Taylor or a
// closed form), Laplace integrals along rays and the sector sums built from
// them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/fitting.hpp"
#include "stokeslab/io.hpp"
#include "stokeslab/linalg.hpp"
#include "stokeslab/odesys.hpp"
#include "stokeslab/quadrature.hpp"
#include "stokeslab/roots.hpp"
#include "stokeslab/scalar.hpp"
#include "stokeslab/series.hpp"

namespace stokeslab {

// ---------------------------------------------------------------------------
// Borel transform

template <typename T>
struct BorelSeries {
  int p = 1;
  TruncatedSeries<T> coeffs;  ///< b_0..b_M
};

namespace detail {

/// 1 / Gamma(1 + m/p) applied to c. Exact when p divides m.
template <typename T>
T divide_by_gamma(const T& c, int m, int p) {
  if (is_zero(c)) return T(0);
  if (m % p == 0) return c / factorial<T>(m / p);
  const double g = std::lgamma(1.0 + static_cast<double>(m) / p);
  const cplx v = to_cplx(c);
  cplx out = g < 700.0 ? v / std::exp(g) : std::exp(std::log(v) - g);
  return from_cplx<T>(out);
}

}  // namespace detail

/// b_m = h_{m+1} / Gamma(1 + m/p), m = 0..N-1, for each component.
template <typename T>
std::vector<BorelSeries<T>> borel_transform(const SeriesVec<T>& h, int p) {
  if (p < 1) throw ValidationError("Borel order p must be >= 1");
  std::vector<BorelSeries<T>> out;
  for (const auto& comp : h) {
    if (!is_zero(comp[0])) throw NonzeroConstantTerm("Borel transform needs a series with zero constant term");
    const int m_max = std::max(comp.order() - 1, 0);
    TruncatedSeries<T> b(m_max);
    for (int m = 0; m <= m_max && m + 1 <= comp.order(); ++m) b[m] = detail::divide_by_gamma(comp[m + 1], m, p);
    out.push_back({p, std::move(b)});
  }
  return out;
}

template <typename T>
BorelSeries<T> borel_transform(const TruncatedSeries<T>& h, int p) {
  return borel_transform(SeriesVec<T>({h}), p).front();
}

// ---------------------------------------------------------------------------
// Gevrey order

struct GevreyEstimate {
  double kappa = 0.0;  ///< fitted Gevrey order
  double log_a = 0.0;  ///< fitted n coefficient
  double constant = 0.0;
  int n_min = 0;
  int n_max = 0;
  int points = 0;
  double rms_residual = 0.0;
};

/// Fit log|c_n| ~ kappa n log n + n log A + const over nonzero coefficients
/// with n in [n_min, n_max] (default [N/4, N]).
template <typename T>
GevreyEstimate gevrey_estimate(const TruncatedSeries<T>& phi, int n_min = -1, int n_max = -1) {
  const int order = phi.order();
  if (n_max < 0) n_max = order;
  if (n_min < 0) n_min = order / 4;
  n_min = std::max(n_min, 1);
  n_max = std::min(n_max, order);
  std::vector<double> nlogn;
  std::vector<double> n_col;
  std::vector<double> ones;
  std::vector<double> y;
  for (int n = n_min; n <= n_max; ++n) {
    if (is_zero(phi[n])) continue;
    const double la = log_abs(phi[n]);
    if (!std::isfinite(la)) continue;
    nlogn.push_back(n * std::log(static_cast<double>(n)));
    n_col.push_back(n);
    ones.push_back(1.0);
    y.push_back(la);
  }
  if (y.size() < 20) {
    throw TooFewCoefficients("Gevrey fit needs >= 20 nonzero coefficients in [" + std::to_string(n_min) + ", " +
                             std::to_string(n_max) + "], found " + std::to_string(y.size()));
  }
  LinearFit f = least_squares({nlogn, n_col, ones}, y);
  GevreyEstimate g;
  g.kappa = f.coeffs[0];
  g.log_a = f.coeffs[1];
  g.constant = f.coeffs[2];
  g.n_min = n_min;
  g.n_max = n_max;
  g.points = static_cast<int>(y.size());
  g.rms_residual = f.rms_residual;
  return g;
}

// ---------------------------------------------------------------------------
// Pade approximants

struct PoleInfo {
  cplx location;
  cplx residue;
  /// |numerator(pole)| relative to the numerator scale; tiny values flag a
  /// pole cancelled by a nearby zero (a spurious doublet).
  double cancellation = 0.0;
  bool spurious = false;
};

struct RationalApproximant {
  std::vector<cplx> numerator;    ///< degree L, ascending
  std::vector<cplx> denominator;  ///< degree M, ascending, constant term 1
  std::vector<PoleInfo> poles;    ///< sorted by modulus

  int L() const { return static_cast<int>(numerator.size()) - 1; }
  int M() const { return static_cast<int>(denominator.size()) - 1; }

  cplx value(cplx t) const { return horner(numerator, t) / horner(denominator, t); }

  /// Taylor coefficients of numerator / denominator through `order`.
  std::vector<cplx> taylor(int order) const {
    std::vector<cplx> out(static_cast<std::size_t>(order + 1), cplx(0.0, 0.0));
    for (int n = 0; n <= order; ++n) {
      cplx acc = n <= L() ? numerator[static_cast<std::size_t>(n)] : cplx(0.0, 0.0);
      for (int j = 1; j <= std::min(n, M()); ++j) acc -= denominator[static_cast<std::size_t>(j)] * out[static_cast<std::size_t>(n - j)];
      out[static_cast<std::size_t>(n)] = acc;
    }
    return out;
  }

  static cplx horner(const std::vector<cplx>& c, cplx t) {
    cplx acc(0.0, 0.0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
  }
};

struct PadeOptions {
  double rank_tol = 1e-10;      ///< relative pivot threshold for reducing M
  double match_tol = 1e-8;      ///< relative Taylor-match tolerance
  double spurious_tol = 1e-7;   ///< cancellation below this marks a pole spurious
};

/// [L/M] Pade approximant of the Borel series. Rank-deficient Toeplitz
/// systems are resolved by lowering M to the numerical rank.
template <typename T>
RationalApproximant pade(const BorelSeries<T>& b, int L, int M, const PadeOptions& opt = {}) {
  if (L < 0 || M < 0) throw ValidationError("Pade degrees must be non-negative");
  const int order = b.coeffs.order();
  if (L + M > order) {
    throw ValidationError("Pade [" + std::to_string(L) + "/" + std::to_string(M) + "] needs order " +
                          std::to_string(L + M) + ", series has " + std::to_string(order));
  }
  std::vector<cplx> c(static_cast<std::size_t>(order + 1));
  double scale = 0.0;
  for (int n = 0; n <= order; ++n) {
    c[static_cast<std::size_t>(n)] = to_cplx(b.coeffs[n]);
    scale = std::max(scale, std::abs(c[static_cast<std::size_t>(n)]));
  }
  auto coef = [&](int n) { return n < 0 ? cplx(0.0, 0.0) : c[static_cast<std::size_t>(n)]; };

  RationalApproximant ra;
  // sum_{j=0..M} q_j c_{L+i-j} = 0 for i = 1..M, q_0 = 1
  std::vector<cplx> q{cplx(1.0, 0.0)};
  while (M > 0) {
    Matrix<cplx> a(M, M);
    for (int i = 1; i <= M; ++i) {
      for (int j = 1; j <= M; ++j) a(i - 1, j - 1) = coef(L + i - j);
    }
    const int rank = numerical_rank(a, opt.rank_tol);
    if (rank < M) {
      M = rank;
      continue;
    }
    LuSolver<cplx> lu(a, 0.0);
    std::vector<cplx> rhs(static_cast<std::size_t>(M));
    for (int i = 1; i <= M; ++i) rhs[static_cast<std::size_t>(i - 1)] = -coef(L + i);
    auto sol = lu.solve(rhs);
    q.insert(q.end(), sol.begin(), sol.end());
    break;
  }
  ra.denominator = q;
  ra.numerator.assign(static_cast<std::size_t>(L + 1), cplx(0.0, 0.0));
  for (int i = 0; i <= L; ++i) {
    cplx acc(0.0, 0.0);
    double bound = 0.0;
    for (int j = 0; j <= std::min(i, M); ++j) {
      acc += q[static_cast<std::size_t>(j)] * coef(i - j);
      bound += std::abs(q[static_cast<std::size_t>(j)] * coef(i - j));
    }
    // after a rank drop the high numerator terms are pure cancellation; left
    // in, rounding noise times t^L dominates far along the rays
    if (std::abs(acc) <= 16.0 * std::numeric_limits<double>::epsilon() * bound) acc = cplx(0.0, 0.0);
    ra.numerator[static_cast<std::size_t>(i)] = acc;
  }
  while (ra.numerator.size() > 1 && ra.numerator.back() == cplx(0.0, 0.0)) ra.numerator.pop_back();

  const auto taylor = ra.taylor(L + M);
  for (int n = 0; n <= L + M; ++n) {
    if (std::abs(taylor[static_cast<std::size_t>(n)] - coef(n)) > opt.match_tol * std::max(scale, 1e-300)) {
      throw DegenerateTable("Pade [" + std::to_string(L) + "/" + std::to_string(M) +
                            "] does not reproduce the series at order " + std::to_string(n));
    }
  }

  double num_scale = 0.0;
  for (const auto& v : ra.numerator) num_scale = std::max(num_scale, std::abs(v));
  for (const cplx& pole : polynomial_roots(q)) {
    PoleInfo info;
    info.location = pole;
    // residue of N/Q at a simple pole: N(t*) / Q'(t*)
    cplx dq(0.0, 0.0);
    for (int j = M; j >= 1; --j) dq = dq * pole + static_cast<double>(j) * q[static_cast<std::size_t>(j)];
    const cplx np = RationalApproximant::horner(ra.numerator, pole);
    info.residue = np / dq;
    double mag = 0.0;
    double powr = 1.0;
    for (const auto& v : ra.numerator) {
      mag += std::abs(v) * powr;
      powr *= std::abs(pole);
    }
    info.cancellation = mag > 0.0 ? std::abs(np) / mag : 0.0;
    info.spurious = info.cancellation < opt.spurious_tol || num_scale == 0.0;
    ra.poles.push_back(info);
  }
  std::sort(ra.poles.begin(), ra.poles.end(),
            [](const PoleInfo& a, const PoleInfo& b) { return std::abs(a.location) < std::abs(b.location); });
  return ra;
}

// ---------------------------------------------------------------------------
// Continuations of the Borel series

/// An analytic continuation of one Borel component along rays from 0.
/// Implementations are immutable and safe to evaluate concurrently.
class BorelFunction {
 public:
  virtual ~BorelFunction() = default;
  virtual cplx value(cplx t) const = 0;
  /// Known (non-spurious) singularities; used for pole guards and contours.
  virtual std::vector<cplx> singularities() const { return {}; }
  virtual std::string kind() const = 0;
};

class PadeBorel : public BorelFunction {
 public:
  explicit PadeBorel(RationalApproximant ra) : ra_(std::move(ra)) {}
  cplx value(cplx t) const override { return ra_.value(t); }
  std::vector<cplx> singularities() const override {
    std::vector<cplx> out;
    for (const auto& p : ra_.poles) {
      if (!p.spurious) out.push_back(p.location);
    }
    return out;
  }
  std::string kind() const override {
    return "pade[" + std::to_string(ra_.L()) + "/" + std::to_string(ra_.M()) + "]";
  }
  const RationalApproximant& approximant() const { return ra_; }

 private:
  RationalApproximant ra_;
};

/// Direct partial sum of the Borel series; adequate when the series is
/// entire (convergent formal solutions).
class TaylorBorel : public BorelFunction {
 public:
  explicit TaylorBorel(TruncatedSeries<cplx> b) : b_(std::move(b)) {}
  cplx value(cplx t) const override { return b_.evaluate(t); }
  std::string kind() const override { return "taylor"; }

 private:
  TruncatedSeries<cplx> b_;
};

class ClosedFormBorel : public BorelFunction {
 public:
  ClosedFormBorel(std::string name, std::function<cplx(cplx)> f, std::vector<cplx> singularities)
      : name_(std::move(name)), f_(std::move(f)), sing_(std::move(singularities)) {}
  cplx value(cplx t) const override { return f_(t); }
  std::vector<cplx> singularities() const override { return sing_; }
  std::string kind() const override { return "exact:" + name_; }

 private:
  std::string name_;
  std::function<cplx(cplx)> f_;
  std::vector<cplx> sing_;
};

using BorelHandle = std::shared_ptr<const BorelFunction>;

/// Closed-form Borel transforms of the bundled case studies, or nullopt.
inline std::optional<std::vector<BorelHandle>> closed_form_borel(const std::string& name) {
  if (name == "euler") {
    return std::vector<BorelHandle>{std::make_shared<ClosedFormBorel>(
        "1/(1-t)", [](cplx t) { return 1.0 / (1.0 - t); }, std::vector<cplx>{1.0})};
  }
  if (name == "odd_pump" || name == "odd-pump") {
    const double s = 1.0 / std::sqrt(2.0);
    return std::vector<BorelHandle>{std::make_shared<ClosedFormBorel>(
        "1/(1-2t^2)", [](cplx t) { return 1.0 / (1.0 - 2.0 * t * t); }, std::vector<cplx>{s, -s})};
  }
  return std::nullopt;
}

enum class Continuation { Auto, Pade, Taylor };

inline Continuation parse_continuation(const std::string& s) {
  if (s == "auto") return Continuation::Auto;
  if (s == "pade") return Continuation::Pade;
  if (s == "taylor") return Continuation::Taylor;
  throw ValidationError("unknown continuation '" + s + "' (expected auto, pade or taylor)");
}

struct ContinuationOptions {
  Continuation mode = Continuation::Auto;
  int pade_l = -1;  ///< -1: min(24, order/2)
  int pade_m = -1;
  PadeOptions pade;
};

/// Root-test heuristic: |b_m|^(1/m) falling by more than a factor 1.5
/// between the second and fourth quarter of the series indicates an entire
/// Borel transform.
inline bool looks_entire(const TruncatedSeries<cplx>& b) {
  const int n = b.order();
  if (b.is_zero_series()) return true;
  if (n < 8) return false;
  auto mean_root = [&](int lo, int hi) {
    double s = 0.0;
    int cnt = 0;
    for (int m = std::max(lo, 1); m <= hi; ++m) {
      if (std::abs(b[m]) == 0.0) continue;
      s += std::log(std::abs(b[m])) / m;
      ++cnt;
    }
    return cnt == 0 ? -std::numeric_limits<double>::infinity() : s / cnt;
  };
  const double early = mean_root(n / 4, n / 2);
  const double late = mean_root(3 * n / 4, n);
  if (!std::isfinite(late)) return true;
  if (!std::isfinite(early)) return false;
  return late < early - std::log(1.5);
}

inline BorelHandle make_continuation(const BorelSeries<cplx>& b, const ContinuationOptions& opt = {}) {
  Continuation mode = opt.mode;
  if (mode == Continuation::Auto) mode = looks_entire(b.coeffs) ? Continuation::Taylor : Continuation::Pade;
  if (mode == Continuation::Taylor) return std::make_shared<TaylorBorel>(b.coeffs);
  const int n = b.coeffs.order();
  const int l = opt.pade_l >= 0 ? opt.pade_l : std::min(24, n / 2);
  const int m = opt.pade_m >= 0 ? opt.pade_m : std::min(24, n / 2);
  return std::make_shared<PadeBorel>(pade(b, l, m, opt.pade));
}

// ---------------------------------------------------------------------------
// Laplace integrals

struct LaplaceOptions {
  QuadratureOptions quad{1e-14, 0.0, 3, 12};
  double pole_guard = 0.05;      ///< minimum distance of a singularity from the ray, relative to its modulus
  double kernel_cutoff = 41.45;  ///< e^{-41.45} ~ 1e-18
  int max_extensions = 6;        ///< doublings of the integration range for growing Borel functions
};

struct LaplaceValue {
  cplx value;
  double est_error = 0.0;  ///< quadrature level difference
  double noise = 0.0;      ///< est_error plus a rounding bound
};

namespace detail {

inline void check_ray_clear(const BorelFunction& b, double phi, double start_radius, double guard) {
  const cplx dir = std::polar(1.0, phi);
  for (const cplx& s : b.singularities()) {
    const double ms = std::abs(s);
    if (ms == 0.0) continue;
    const cplx rel = s / dir;
    const double dist = rel.real() < start_radius ? std::abs(s - start_radius * dir) : std::abs(rel.imag());
    if (dist < guard * ms) {
      throw PoleOnRay("singularity at (" + fmt17(s.real()) + ", " + fmt17(s.imag()) + ") lies within " +
                      fmt17(guard) + "|t| of the ray arg t = " + fmt17(phi));
    }
  }
}

inline LaplaceValue finish(const QuadratureResult& q) {
  return {q.value, q.est_error, q.est_error + 16.0 * std::numeric_limits<double>::epsilon() * q.l1_norm};
}

}  // namespace detail

/// Integral of e^{-t^p/z^p} B(t) p t^{p-1} / z^{p-1} dt along the ray
/// arg t = phi from |t| = sigma0^{1/p} to infinity, in the variable
/// sigma = |t|^p - sigma0.
inline LaplaceValue laplace_ray(const BorelFunction& b, int p, double phi, cplx z, double sigma0,
                                const LaplaceOptions& opt = {}) {
  if (z == cplx(0.0, 0.0)) throw ValidationError("Laplace sum at z = 0");
  const cplx rot = std::polar(1.0, p * phi);
  const cplx zp = std::pow(z, p);
  const cplx kernel_rate = rot / zp;  // integrand ~ exp(-sigma * kernel_rate)
  const double c = kernel_rate.real();
  if (!(c > 0.0)) {
    throw NonDecayingIntegrand("Re(e^{ip theta}/z^p) = " + fmt17(c) + " <= 0 for theta = " + fmt17(phi));
  }
  detail::check_ray_clear(b, phi, std::pow(sigma0, 1.0 / p), opt.pole_guard);
  const cplx dir = std::polar(1.0, phi);
  const cplx prefactor = rot / std::pow(z, p - 1);
  auto f = [&](double sigma) {
    const double s = sigma0 + sigma;
    const double radius = p == 1 ? s : std::pow(s, 1.0 / p);
    return b.value(radius * dir) * std::exp(-s * kernel_rate) * prefactor;
  };

  double upper = opt.kernel_cutoff / c;
  for (int ext = 0;; ++ext) {
    double peak = 0.0;
    for (int i = 0; i <= 32; ++i) peak = std::max(peak, std::abs(f(upper * i / 32.0)));
    const double end = std::abs(f(upper));
    if (!std::isfinite(peak) || !std::isfinite(end)) {
      throw NonDecayingIntegrand("integrand overflows along arg t = " + fmt17(phi));
    }
    if (end <= 1e-17 * peak || peak == 0.0) break;
    if (ext >= opt.max_extensions) {
      throw NonDecayingIntegrand("Borel continuation grows too fast along arg t = " + fmt17(phi));
    }
    upper *= 2.0;
  }
  return detail::finish(tanh_sinh([&](double sigma) { return f(sigma); }, 0.0, upper, opt.quad));
}

/// Laplace sum of order p along d_theta.
inline LaplaceValue laplace_sum(const BorelFunction& b, int p, double theta, cplx z, const LaplaceOptions& opt = {}) {
  return laplace_ray(b, p, theta, z, 0.0, opt);
}

/// Same integrand along the arc t = R e^{i psi}, psi from psi0 to psi1.
inline LaplaceValue laplace_arc(const BorelFunction& b, int p, double radius, double psi0, double psi1, cplx z,
                                const LaplaceOptions& opt = {}) {
  const cplx zp = std::pow(z, p);
  const cplx zp1 = std::pow(z, p - 1);
  auto f = [&](double psi) {
    const cplx t = std::polar(radius, psi);
    const cplx tp = std::pow(t, p);
    return b.value(t) * std::exp(-tp / zp) * static_cast<double>(p) * tp / zp1 * cplx(0.0, 1.0);
  };
  return detail::finish(tanh_sinh([&](double psi) { return f(psi); }, psi0, psi1, opt.quad));
}

/// Integral of e^{-t^p/z^p} B(t) p t^{p-1} / z^{p-1} dt along the path t(u),
/// u in [u0, u1], with derivative dt(u).
template <typename Path, typename Deriv>
LaplaceValue laplace_path(const BorelFunction& b, int p, cplx z, Path&& t_of, Deriv&& dt_of, double u0, double u1,
                          const LaplaceOptions& opt = {}) {
  const cplx zp = std::pow(z, p);
  const cplx zp1 = std::pow(z, p - 1);
  auto f = [&](double u) {
    const cplx t = t_of(u);
    return b.value(t) * std::exp(-std::pow(t, p) / zp) * static_cast<double>(p) * std::pow(t, p - 1) / zp1 * dt_of(u);
  };
  return detail::finish(tanh_sinh([&](double u) { return f(u); }, u0, u1, opt.quad));
}

/// Difference of the Laplace integrals on the two sides of the ray
/// arg t = theta, taken along a keyhole that starts at the singularity at
/// distance `a`: a circle of radius eps around it, then two legs at distance
/// eps on either side of the ray. `further` lists the distances of other
/// singularities on the same ray; the legs are split around them.
inline LaplaceValue laplace_keyhole(const BorelFunction& b, int p, double theta, double a, double eps,
                                    const std::vector<double>& further, cplx z, const LaplaceOptions& opt = {}) {
  const cplx e = std::polar(1.0, theta);
  const cplx zp = std::pow(z, p);
  const double c = (std::polar(1.0, p * theta) / zp).real();
  if (!(c > 0.0)) {
    throw NonDecayingIntegrand("Re(e^{ip theta}/z^p) = " + fmt17(c) + " <= 0 for theta = " + fmt17(theta));
  }
  const cplx centre = a * e;
  // circle from below the ray to above it, passing on the origin side
  LaplaceValue out = laplace_path(
      b, p, z, [&](double phi) { return centre + eps * e * std::polar(1.0, phi); },
      [&](double phi) { return cplx(0.0, eps) * e * std::polar(1.0, phi); }, -3 * kPi / 2, -kPi / 2, opt);
  out.value = -out.value;  // traversed from -pi/2 down to -3pi/2

  auto leg_integrand = [&](double s, double side) {
    const cplx t = e * cplx(a + s, side * eps);
    return b.value(t) * std::exp(-std::pow(t, p) / zp) * static_cast<double>(p) * std::pow(t, p - 1) /
           std::pow(z, p - 1) * e;
  };
  double upper = std::pow(std::pow(a, p) + opt.kernel_cutoff / c, 1.0 / p) - a + 8 * eps;
  for (int ext = 0;; ++ext) {
    double peak = 0.0;
    for (int i = 0; i <= 32; ++i) peak = std::max(peak, std::abs(leg_integrand(upper * i / 32.0, 1.0)));
    const double end = std::abs(leg_integrand(upper, 1.0));
    if (!std::isfinite(peak) || !std::isfinite(end)) {
      throw NonDecayingIntegrand("integrand overflows along arg t = " + fmt17(theta));
    }
    if (end <= 1e-17 * peak || peak == 0.0) break;
    if (ext >= opt.max_extensions) {
      throw NonDecayingIntegrand("Borel continuation grows too fast along arg t = " + fmt17(theta));
    }
    upper *= 2.0;
  }
  std::vector<double> cuts{0.0, std::min(4 * eps, upper), upper};
  for (double r : further) {
    const double s = r - a;
    for (double x : {s - 4 * eps, s, s + 4 * eps}) {
      if (x > 0.0 && x < upper) cuts.push_back(x);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    for (double side : {1.0, -1.0}) {
      auto q = tanh_sinh([&](double s) { return leg_integrand(s, side); }, cuts[i], cuts[i + 1], opt.quad);
      LaplaceValue piece = detail::finish(q);
      out.value += side * piece.value;
      out.est_error += piece.est_error;
      out.noise += piece.noise;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resummation of a system's formal solution

struct ResumOptions {
  int order = kDefaultOrder;  ///< formal-solution order used for the Borel series
  ContinuationOptions continuation;
  LaplaceOptions laplace;
};

struct LateralSums {
  std::vector<LaplaceValue> minus;  ///< ray theta* - delta
  std::vector<LaplaceValue> plus;   ///< ray theta* + delta
  double delta = 0.0;
};

struct JumpValue {
  std::vector<cplx> value;  ///< H_plus - H_minus, plus = larger argument
  std::vector<double> noise;
  double contour_radius = 0.0;
};

class SectorSum;

/// Borel-Laplace machinery for one system. Cheap to copy; evaluation is
/// const and thread-safe.
class Resummation {
 public:
  Resummation(const OdeSystem<cplx>& sys, const SeriesVec<cplx>& h, ResumOptions opt = {},
              std::optional<std::vector<BorelHandle>> handles = std::nullopt)
      : p_(sys.p()),
        r_(sys.r()),
        opt_(opt),
        table_(singular_directions(sys.p(), eigenvalues(linear_part(sys)))) {
    if (h.dim() != r_) throw ValidationError("formal solution dimension does not match the system");
    if (handles) {
      if (static_cast<int>(handles->size()) != r_) throw ValidationError("need one Borel handle per component");
      borel_ = *handles;
    } else {
      for (const auto& b : borel_transform(h, p_)) borel_.push_back(make_continuation(b, opt_.continuation));
    }
  }

  /// Convenience: computes the formal solution at opt.order.
  explicit Resummation(const OdeSystem<cplx>& sys, ResumOptions opt = {},
                       std::optional<std::vector<BorelHandle>> handles = std::nullopt)
      : Resummation(sys, formal_solution(sys, opt.order), opt, std::move(handles)) {}

  int p() const { return p_; }
  int r() const { return r_; }
  const SingularDirectionTable& directions() const { return table_; }
  const BorelFunction& borel(int j) const { return *borel_[static_cast<std::size_t>(j)]; }
  const ResumOptions& options() const { return opt_; }

  /// Laplace sums of every component along arg t = phi.
  std::vector<LaplaceValue> along(double phi, cplx z) const {
    std::vector<LaplaceValue> out;
    for (const auto& b : borel_) out.push_back(laplace_sum(*b, p_, phi, z, opt_.laplace));
    return out;
  }

  /// Angular offset of the lateral rays around singular direction d.
  double lateral_offset(int d) const { return std::min(kPi / (4.0 * p_), 0.5 * table_.gap(d)); }

  /// Sums on both sides of singular direction d. The rays are placed
  /// lateral_offset(d) away from the singular ray; by Cauchy's theorem the
  /// values equal the lateral sums for any smaller offset.
  LateralSums lateral_sums(int d, cplx z) const {
    const double theta = table_.theta(d);
    const double delta = lateral_offset(d);
    return {along(theta - delta, z), along(theta + delta, z), delta};
  }

  /// H_plus(z) - H_minus(z) across singular direction d, as one contour
  /// integral: the plus ray minus the minus ray, with the part inside
  /// |t| < R replaced by the arc |t| = R (no singularity lies in that
  /// wedge). Rounding is relative to e^{-R^p/|z|^p}, not to |H(z)|.
  JumpValue jump(int d, cplx z) const {
    const double theta = table_.theta(d);
    const double delta = lateral_offset(d);
    const double radius = contour_radius(d);
    const double sigma0 = std::pow(radius, p_);
    JumpValue out;
    out.contour_radius = radius;
    for (const auto& b : borel_) {
      // singularities inside the lateral wedge; if all of them sit on the
      // ray, hug the nearest one with a keyhole
      std::vector<double> on_ray;
      bool off_ray = false;
      for (const cplx& s : b->singularities()) {
        if (std::abs(s) == 0.0) continue;
        const double ang = angular_distance(std::arg(s), theta);
        if (ang > delta + 1e-12) continue;
        if (ang < 1e-8) {
          on_ray.push_back(std::abs(s));
        } else {
          off_ray = true;
        }
      }
      if (!on_ray.empty() && !off_ray) {
        std::sort(on_ray.begin(), on_ray.end());
        const double a = on_ray.front();
        double eps = std::min(0.25 * a, 5.0 * std::pow(std::abs(z), p_) / (p_ * std::pow(a, p_ - 1)));
        if (on_ray.size() > 1) eps = std::min(eps, 0.25 * (on_ray[1] - a));
        std::vector<double> further(on_ray.begin() + 1, on_ray.end());
        LaplaceValue k = laplace_keyhole(*b, p_, theta, a, eps, further, z, opt_.laplace);
        out.value.push_back(k.value);
        out.noise.push_back(k.noise);
        continue;
      }
      LaplaceValue hi = laplace_ray(*b, p_, theta + delta, z, sigma0, opt_.laplace);
      LaplaceValue lo = laplace_ray(*b, p_, theta - delta, z, sigma0, opt_.laplace);
      LaplaceValue arc = laplace_arc(*b, p_, radius, theta - delta, theta + delta, z, opt_.laplace);
      out.value.push_back(hi.value - lo.value + arc.value);
      out.noise.push_back(hi.noise + lo.noise + arc.noise);
    }
    return out;
  }

  /// Radius of the arc used by jump(): 0.9 times the smaller of the expected
  /// singularity |lambda/p|^{1/p} and the nearest known singularity in the
  /// lateral wedge.
  double contour_radius(int d) const {
    const double theta = table_.theta(d);
    const double delta = lateral_offset(d);
    const cplx lambda = table_.eigenvalues[static_cast<std::size_t>(table_.entry(d).eigen_index)];
    double radius = std::pow(std::abs(lambda) / p_, 1.0 / p_);
    for (const auto& b : borel_) {
      for (const cplx& s : b->singularities()) {
        if (std::abs(s) == 0.0) continue;
        if (angular_distance(std::arg(s), theta) <= delta + 1e-12) radius = std::min(radius, std::abs(s));
      }
    }
    return 0.9 * radius;
  }

  SectorSum sector_sum(int l) const;

 private:
  int p_;
  int r_;
  ResumOptions opt_;
  SingularDirectionTable table_;
  std::vector<BorelHandle> borel_;
};

/// H_l on the sector between singular directions l and l+1, extended by
/// just under pi/(2p) on both sides.
class SectorSum {
 public:
  SectorSum(Resummation resum, int l) : resum_(std::move(resum)), l_(l) {
    const auto& t = resum_.directions();
    const int n = t.size();
    l_ = ((l % n) + n) % n;
    theta_lo_ = t.theta(l_);
    theta_hi_ = t.theta(l_ + 1);
    ray_lo_ = theta_lo_ + resum_.lateral_offset(l_);
    ray_hi_ = theta_hi_ - resum_.lateral_offset(l_ + 1);
  }

  int index() const { return l_; }
  double theta_lo() const { return theta_lo_; }
  double theta_hi() const { return theta_hi_; }
  /// Half-opening added beyond the outermost rays.
  double reach() const { return kPi / (2.0 * resum_.p()); }
  /// Direction bisecting the sector.
  double bisector() const { return 0.5 * (theta_lo_ + theta_hi_); }

  /// Integration ray used for arg z = phi, or nullopt when phi (taken modulo
  /// 2pi) is outside the sector.
  std::optional<double> ray_for(double phi) const {
    std::optional<double> best;
    double best_gap = reach();
    for (int k = -2; k <= 2; ++k) {
      const double a = phi + kTwoPi * k;
      const double ray = std::clamp(a, ray_lo_, ray_hi_);
      const double gap = std::abs(ray - a);
      if (gap < best_gap - 1e-9) {
        best_gap = gap;
        best = ray;
      }
    }
    return best;
  }

  bool contains(double phi) const { return ray_for(phi).has_value(); }

  std::vector<LaplaceValue> evaluate(cplx z) const { return evaluate(z, std::arg(z)); }

  /// Evaluate with an explicit argument for z (matters only for p > 1
  /// sheets; the integrand depends on z through z^p and z^{p-1}).
  std::vector<LaplaceValue> evaluate(cplx z, double arg) const {
    auto ray = ray_for(arg);
    if (!ray) {
      throw OutOfSector("arg z = " + fmt17(arg) + " is outside sector " + std::to_string(l_) + " (" +
                        fmt17(theta_lo_) + ", " + fmt17(theta_hi_) + ")");
    }
    return resum_.along(*ray, z);
  }

  std::vector<cplx> values(cplx z) const {
    std::vector<cplx> out;
    for (const auto& v : evaluate(z)) out.push_back(v.value);
    return out;
  }

 private:
  Resummation resum_;
  int l_;
  double theta_lo_ = 0.0;
  double theta_hi_ = 0.0;
  double ray_lo_ = 0.0;
  double ray_hi_ = 0.0;
};

inline SectorSum Resummation::sector_sum(int l) const { return SectorSum(*this, l); }

// ---------------------------------------------------------------------------
// Reports

struct ResumRow {
  cplx z;
  int component = 0;
  LaplaceValue value;
};

inline void write_resum_csv(std::ostream& os, const std::vector<ResumRow>& rows) {
  os << "z_re,z_im,component,value_re,value_im,est_error\n";
  for (const auto& row : rows) {
    os << fmt17(row.z.real()) << ',' << fmt17(row.z.imag()) << ',' << row.component << ','
       << fmt17(row.value.value.real()) << ',' << fmt17(row.value.value.imag()) << ','
       << fmt17(row.value.est_error) << '\n';
  }
}

inline json approximant_to_json(const RationalApproximant& ra) {
  json poles = json::array();
  for (const auto& p : ra.poles) {
    poles.push_back({{"location", complex_to_json(p.location)},
                     {"residue", complex_to_json(p.residue)},
                     {"cancellation", p.cancellation},
                     {"spurious", p.spurious}});
  }
  json num = json::array();
  for (const auto& c : ra.numerator) num.push_back(complex_to_json(c));
  json den = json::array();
  for (const auto& c : ra.denominator) den.push_back(complex_to_json(c));
  return {{"L", ra.L()}, {"M", ra.M()}, {"numerator", num}, {"denominator", den}, {"poles", poles}};
}

inline json gevrey_to_json(const GevreyEstimate& g) {
  return {{"kappa", g.kappa},       {"log_a", g.log_a},   {"constant", g.constant},
          {"n_min", g.n_min},       {"n_max", g.n_max},   {"points", g.points},
          {"rms_residual", g.rms_residual}};
}

}  // namespace stokeslab
