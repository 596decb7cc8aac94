#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stokeslab/dynamics.hpp"
#include "stokeslab/errors.hpp"
#include "stokeslab/fitting.hpp"
#include "stokeslab/io.hpp"
#include "stokeslab/mpoly.hpp"
#include "stokeslab/odesys.hpp"
#include "stokeslab/series.hpp"

namespace stokeslab {

enum class ProbeMode { SQA, SAT };

inline std::string to_string(ProbeMode m) { return m == ProbeMode::SQA ? "SQA" : "SAT"; }

inline ProbeMode parse_probe_mode(const std::string& s) {
  if (s == "SQA" || s == "sqa") return ProbeMode::SQA;
  if (s == "SAT" || s == "sat") return ProbeMode::SAT;
  throw ValidationError("probe mode must be SQA or SAT, got '" + s + "'");
}

inline constexpr int kProbeOrder = 48;

/// f(x, {z_jl}) together with the polynomials P_1..P_n and the jet level k.
/// f is a polynomial in 1 + r n variables: x at index 0 and z_jl (component
/// j, polynomial l, both 0-based) at index 1 + j n + l.
template <typename T = cplx>
struct SimpleFunctionSpec {
  int r = 1;
  MPoly<T> f{2};
  std::vector<TruncatedSeries<T>> polynomials;
  int k = 0;
  ProbeMode mode = ProbeMode::SQA;

  int n() const { return static_cast<int>(polynomials.size()); }
  static int var_index(int j, int l, int n) { return 1 + j * n + l; }

  template <typename To>
  SimpleFunctionSpec<To> convert() const {
    SimpleFunctionSpec<To> out;
    out.r = r;
    out.f = f.template convert<To>();
    for (const auto& p : polynomials) out.polynomials.push_back(convert_series<To>(p));
    out.k = k;
    out.mode = mode;
    return out;
  }
};

namespace detail {

template <typename T>
int poly_degree(const TruncatedSeries<T>& p) {
  for (int n = p.order(); n >= 0; --n) {
    if (!is_zero(p[n])) return n;
  }
  return -1;
}

template <typename T>
bool same_polynomial(const TruncatedSeries<T>& a, const TruncatedSeries<T>& b) {
  const int n = std::max(a.order(), b.order());
  for (int i = 0; i <= n; ++i) {
    if (a.coeff(i) != b.coeff(i)) return false;
  }
  return true;
}

template <typename T>
TruncatedSeries<T> resized(const TruncatedSeries<T>& s, int order) {
  TruncatedSeries<T> out(order);
  for (int i = 0; i <= order; ++i) out[i] = s.coeff(i);
  return out;
}

/// s / x^v; the dropped low coefficients must vanish.
template <typename T>
TruncatedSeries<T> divide_by_power(const TruncatedSeries<T>& s, int v) {
  TruncatedSeries<T> out(std::max(0, s.order() - v));
  for (int i = 0; i <= out.order(); ++i) out[i] = s.coeff(i + v);
  return out;
}

}  // namespace detail

/// Checks the hypotheses for the chosen mode and returns the spec with the
/// mode recorded. SQA: val P_l > 0 with a positive real leading coefficient.
/// SAT additionally: deg P_l < (p+1) val P_l and the P_l pairwise distinct.
template <typename T>
SimpleFunctionSpec<T> validate_spec(SimpleFunctionSpec<T> spec, int p, ProbeMode mode) {
  const int n = spec.n();
  if (n < 1) throw InvalidPolynomial("need at least one polynomial");
  if (spec.r < 1) throw ValidationError("r must be >= 1");
  if (spec.k < 0) throw ValidationError("jet level k must be >= 0");
  if (spec.f.nvars() != 1 + spec.r * n) {
    throw ValidationError("f must be a polynomial in " + std::to_string(1 + spec.r * n) + " variables, got " +
                          std::to_string(spec.f.nvars()));
  }
  if (!is_zero(spec.f.coeff(Exponents(static_cast<std::size_t>(spec.f.nvars()), 0)))) {
    throw ValidationError("f(0) must vanish");
  }
  for (int l = 0; l < n; ++l) {
    const auto& P = spec.polynomials[static_cast<std::size_t>(l)];
    const int nu = P.valuation();
    if (nu == kInfiniteValuation) throw InvalidPolynomial("P_" + std::to_string(l + 1) + " is zero");
    if (nu == 0) throw InvalidPolynomial("P_" + std::to_string(l + 1) + " must vanish at 0");
    const cplx lead = to_cplx(P[nu]);
    if (lead.imag() != 0.0 || !(lead.real() > 0.0)) {
      throw NonpositiveLeading("P_" + std::to_string(l + 1) + " has leading coefficient (" + fmt17(lead.real()) +
                               ", " + fmt17(lead.imag()) + ")");
    }
    if (mode == ProbeMode::SAT) {
      const int deg = detail::poly_degree(P);
      if (deg >= (p + 1) * nu) {
        throw DegreeBoundViolated("deg P_" + std::to_string(l + 1) + " = " + std::to_string(deg) +
                                  " is not below (p+1) val = " + std::to_string((p + 1) * nu));
      }
      for (int m = 0; m < l; ++m) {
        if (detail::same_polynomial(P, spec.polynomials[static_cast<std::size_t>(m)])) {
          throw DuplicatePolynomials("P_" + std::to_string(m + 1) + " and P_" + std::to_string(l + 1) +
                                     " coincide");
        }
      }
    }
  }
  spec.mode = mode;
  return spec;
}

/// f(x, {T_k H_j(P_l(x))}) as a truncated series of the given order.
template <typename T>
TruncatedSeries<T> composed_series(const SimpleFunctionSpec<T>& spec, const SeriesVec<T>& h, int order) {
  if (h.dim() != spec.r) throw ValidationError("series dimension does not match the spec");
  if (h.order() - spec.k < order) {
    throw InsufficientOrder("need the formal solution to order " + std::to_string(order + spec.k) + ", have " +
                            std::to_string(h.order()));
  }
  const int n = spec.n();
  std::vector<TruncatedSeries<T>> args(static_cast<std::size_t>(1 + spec.r * n));
  args[0] = TruncatedSeries<T>::variable(order);
  for (int j = 0; j < spec.r; ++j) {
    const TruncatedSeries<T> t = tail(h[j], spec.k).truncated(order);
    for (int l = 0; l < n; ++l) {
      const auto P = detail::resized(spec.polynomials[static_cast<std::size_t>(l)], order);
      args[static_cast<std::size_t>(SimpleFunctionSpec<T>::var_index(j, l, n))] = compose(t, P);
    }
  }
  return spec.f.evaluate(std::span<const TruncatedSeries<T>>(args), order);
}

struct SatResult {
  bool vanishes = false;       ///< all coefficients through `order` are zero
  int first_nonzero_order = -1;
  cplx coefficient;            ///< value of the first nonzero coefficient
  int order = 0;
};

/// Composes f with the tails of the formal solution and reports whether the
/// result vanishes through order N. Under (DA) and (SD) a vanishing result
/// with f != 0 would contradict analytic transcendence; this is a report,
/// not a proof.
template <typename T>
SatResult sat_probe(const SimpleFunctionSpec<T>& spec, const SeriesVec<T>& h, int order) {
  const TruncatedSeries<T> phi = composed_series(spec, h, order);
  SatResult res;
  res.order = order;
  res.vanishes = true;
  for (int i = 0; i <= order; ++i) {
    if (!is_zero(phi[i])) {
      res.vanishes = false;
      res.first_nonzero_order = i;
      res.coefficient = to_cplx(phi[i]);
      break;
    }
  }
  return res;
}

template <typename T>
SatResult sat_probe(const SimpleFunctionSpec<T>& spec, const OdeSystem<T>& sys, int order) {
  return sat_probe(spec, formal_solution(sys, order + spec.k), order);
}

// ---------------------------------------------------------------------------
// Normalization of the polynomials

struct NormalizedSpec {
  SimpleFunctionSpec<cplx> spec;  ///< f~ over the reduced polynomials Q
  std::vector<int> reduced_index; ///< P_l -> index of its Q
  int order = 0;
};

/// Replaces each P_l by Q_l = J_{(p+1) val P_l - 1} P_l (deduplicated) and
/// rewrites f through the formal flow, using
/// H(P) = B(u, Q, H(Q)) with P = Q + Q^(p+1) u. The flow is truncated at
/// `z_order` in z, so agreement is up to that truncation.
inline NormalizedSpec normalize_polynomials(const SimpleFunctionSpec<cplx>& spec, const OdeSystem<cplx>& sys,
                                            int order = 12, int z_order = 40) {
  const int p = sys.p();
  const int r = sys.r();
  const int n = spec.n();
  const int k = spec.k;
  if (spec.r != r) throw ValidationError("spec dimension does not match the system");

  NormalizedSpec out;
  out.order = order;
  std::vector<TruncatedSeries<cplx>> reduced;
  int max_nu = 1;
  for (const auto& P : spec.polynomials) {
    const int nu = P.valuation();
    if (nu == 0 || nu == kInfiniteValuation) throw InvalidPolynomial("polynomials must vanish at 0 and be nonzero");
    max_nu = std::max(max_nu, nu);
    TruncatedSeries<cplx> q = jet(detail::resized(P, std::max(P.order(), (p + 1) * nu - 1)), (p + 1) * nu - 1);
    int idx = -1;
    for (std::size_t m = 0; m < reduced.size(); ++m) {
      if (detail::same_polynomial(reduced[m], q)) idx = static_cast<int>(m);
    }
    if (idx < 0) {
      idx = static_cast<int>(reduced.size());
      reduced.push_back(q);
    }
    out.reduced_index.push_back(idx);
  }
  const int nq = static_cast<int>(reduced.size());
  const int extended = order + k * max_nu;  // room for the division by P^k
  const int nv = 1 + r * nq;
  const Truncation keep_ext = [extended](const Exponents& e) {
    int d = 0;
    for (int v : e) d += v;
    return d <= extended;
  };
  const Truncation keep = [order](const Exponents& e) {
    int d = 0;
    for (int v : e) d += v;
    return d <= order;
  };

  const SeriesVec<cplx> h = formal_solution(sys, extended + 1);
  const FormalFlow<cplx> flow = formal_flow(sys, FlowOrders{z_order, extended, extended});

  std::vector<MPoly<cplx>> images(static_cast<std::size_t>(1 + r * n), MPoly<cplx>(nv));
  images[0] = MPoly<cplx>::variable(nv, 0);
  for (int l = 0; l < n; ++l) {
    const int q = out.reduced_index[static_cast<std::size_t>(l)];
    const auto P = detail::resized(spec.polynomials[static_cast<std::size_t>(l)], extended);
    const auto Q = detail::resized(reduced[static_cast<std::size_t>(q)], extended);
    const int nu = Q.valuation();

    // u = (P - Q) / Q^(p+1)
    const auto qp1 = detail::divide_by_power(Q.pow(p + 1), (p + 1) * nu);
    const auto u = detail::resized(detail::divide_by_power(P - Q, (p + 1) * nu), qp1.order()) * qp1.reciprocal();
    // 1 / (P^k / x^(k nu))
    const auto pk_unit = detail::divide_by_power(P.pow(k), k * nu).reciprocal();

    std::vector<MPoly<cplx>> flow_args;
    flow_args.push_back(detail::univariate_as_mpoly(u, nv, 0, extended));
    flow_args.push_back(detail::univariate_as_mpoly(Q, nv, 0, extended));
    const auto qk = detail::univariate_as_mpoly(Q.pow(k), nv, 0, extended);
    for (int j = 0; j < r; ++j) {
      const auto jk = compose(detail::resized(jet(h[j], k), extended), Q);
      MPoly<cplx> w = detail::univariate_as_mpoly(jk, nv, 0, extended);
      w += MPoly<cplx>::multiply(qk, MPoly<cplx>::variable(nv, 1 + j * nq + q), keep_ext);
      flow_args.push_back(w);
    }
    const auto unit = detail::univariate_as_mpoly(pk_unit, nv, 0, extended);
    for (int j = 0; j < r; ++j) {
      MPoly<cplx> b = flow.components[static_cast<std::size_t>(j)].substitute(
          std::span<const MPoly<cplx>>(flow_args), keep_ext);
      const auto jp = compose(detail::resized(jet(h[j], k), extended), P);
      b = b - detail::univariate_as_mpoly(jp, nv, 0, extended);
      // divide by x^(k nu), then by the unit part of P^k
      MPoly<cplx> shifted(nv);
      for (const auto& [e, c] : b.terms()) {
        if (e[0] < k * nu) continue;  // cancels up to the flow truncation
        Exponents f = e;
        f[0] -= k * nu;
        shifted.add_term(std::move(f), c);
      }
      images[static_cast<std::size_t>(SimpleFunctionSpec<cplx>::var_index(j, l, n))] =
          MPoly<cplx>::multiply(shifted, unit, keep);
    }
  }

  out.spec.r = r;
  out.spec.k = k;
  out.spec.mode = spec.mode;
  out.spec.polynomials = reduced;
  out.spec.f = spec.f.substitute(std::span<const MPoly<cplx>>(images), keep);
  return out;
}

// ---------------------------------------------------------------------------
// Numeric probe on trajectories

struct SqaOptions {
  double flat_threshold = 1e-3;  ///< fit the exponential order when max |phi| is below this
  double noise_factor = 10.0;    ///< samples within this many noise units of 0 are skipped when counting zeros
};

struct SqaSample {
  double x = 0.0;
  cplx phi;
  double noise = 0.0;         ///< propagated trajectory error
  double cancellation = 1.0;  ///< worst |H| / |H - J_k H| over the arguments
};

struct SqaResult {
  std::vector<SqaSample> samples;
  int zero_count = 0;
  int resolved = 0;  ///< samples above the noise floor
  std::optional<ExponentialOrderFit> fit;
  std::string note;
};

/// Grid points of `traj` whose images P_l(x) stay inside the trajectory range.
template <typename T>
std::vector<double> probe_grid(const SimpleFunctionSpec<T>& spec, const Trajectory& traj) {
  std::vector<double> out;
  for (double x : traj.grid) {
    bool ok = true;
    for (const auto& P : spec.polynomials) {
      const double y = to_cplx(P.evaluate(cplx(x, 0.0))).real();
      if (!(y >= traj.x_min() && y <= traj.x_max())) ok = false;
    }
    if (ok) out.push_back(x);
  }
  return out;
}

/// phi(x) = f(x, {T_k H_j(P_l(x))}) on the grid `xs`, with T_k H formed from
/// trajectory values and exact jets of the formal solution.
inline SqaResult sqa_probe(const SimpleFunctionSpec<cplx>& spec, const OdeSystem<cplx>& sys, const Trajectory& traj,
                           const SeriesVec<cplx>& h, const std::vector<double>& xs, const SqaOptions& opt = {}) {
  if (h.order() < spec.k) throw InsufficientOrder("formal solution shorter than the jet level");
  if (spec.r != sys.r()) throw ValidationError("spec dimension does not match the system");
  const int n = spec.n();
  // L1 size of f's coefficients times degree, a crude Lipschitz factor
  double lip = 0.0;
  for (const auto& [e, c] : spec.f.terms()) {
    int d = 0;
    for (std::size_t v = 1; v < e.size(); ++v) d += e[v];
    lip += std::abs(c) * d;
  }
  SqaResult res;
  for (double x : xs) {
    std::vector<cplx> point(static_cast<std::size_t>(1 + spec.r * n));
    point[0] = x;
    SqaSample s;
    s.x = x;
    double arg_noise = 0.0;
    double arg_size = 1.0;
    for (int l = 0; l < n; ++l) {
      const double y = spec.polynomials[static_cast<std::size_t>(l)].evaluate(cplx(x, 0.0)).real();
      if (!(y > 0.0) || y < traj.x_min() || y > traj.x_max()) {
        throw RangeExceeded("P_" + std::to_string(l + 1) + "(" + fmt17(x) + ") = " + fmt17(y) +
                            " is outside the trajectory range");
      }
      const State H = evaluate_at(sys, traj, y);
      const double yk = std::pow(y, spec.k);
      for (int j = 0; j < spec.r; ++j) {
        const cplx jk = h[j].partial_sum(cplx(y, 0.0), spec.k);
        const cplx diff = H[static_cast<std::size_t>(j)] - jk;
        const cplx t = diff / yk;
        point[static_cast<std::size_t>(SimpleFunctionSpec<cplx>::var_index(j, l, n))] = t;
        arg_noise = std::max(arg_noise, traj.tol * (1.0 + std::abs(H[static_cast<std::size_t>(j)])) / yk);
        arg_size = std::max(arg_size, std::abs(t));
        if (std::abs(diff) > 0.0) {
          s.cancellation = std::max(s.cancellation, std::max(std::abs(H[static_cast<std::size_t>(j)]), std::abs(jk)) /
                                                        std::abs(diff));
        }
      }
    }
    s.phi = spec.f.evaluate(point);
    s.noise = lip * arg_noise * std::pow(arg_size, std::max(0, spec.f.total_degree() - 1));
    res.samples.push_back(s);
  }

  std::vector<double> resolved;
  double max_phi = 0.0;
  for (const auto& s : res.samples) {
    max_phi = std::max(max_phi, std::abs(s.phi));
    if (std::abs(s.phi.real()) > opt.noise_factor * s.noise) resolved.push_back(s.phi.real());
  }
  res.resolved = static_cast<int>(resolved.size());
  res.zero_count = zero_count(resolved);
  if (!res.samples.empty() && max_phi < opt.flat_threshold && max_phi > 0.0) {
    std::vector<double> x;
    std::vector<double> m;
    for (const auto& s : res.samples) {
      if (std::abs(s.phi) > opt.noise_factor * s.noise) {
        x.push_back(s.x);
        m.push_back(std::abs(s.phi));
      }
    }
    try {
      res.fit = exp_order_fit(x, m);
    } catch (const FitDiverged& e) {
      res.note = std::string("no exponential-order fit: ") + e.what();
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Random specs for property checks

struct RandomSpecOptions {
  int max_degree = 3;   ///< total degree of f
  int max_polys = 2;
  int coeff_range = 2;  ///< coefficients in [-range, range] \ {0}
  int max_terms = 4;
  int max_k = 2;
};

/// A random nonzero sparse f with SAT-admissible polynomials for rank p.
template <typename T = ExactComplex>
SimpleFunctionSpec<T> random_sat_spec(std::mt19937_64& rng, int r, int p, const RandomSpecOptions& opt = {}) {
  auto uniform = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto nonzero = [&] {
    int c = uniform(1, opt.coeff_range);
    return uniform(0, 1) == 0 ? c : -c;
  };
  SimpleFunctionSpec<T> spec;
  spec.r = r;
  spec.mode = ProbeMode::SAT;
  spec.k = uniform(0, opt.max_k);
  const int n = uniform(1, opt.max_polys);
  while (static_cast<int>(spec.polynomials.size()) < n) {
    const int nu = uniform(1, 2);
    const int deg = uniform(nu, (p + 1) * nu - 1);
    TruncatedSeries<T> P(deg);
    P[nu] = from_int<T>(uniform(1, 3));
    for (int i = nu + 1; i <= deg; ++i) P[i] = from_int<T>(uniform(-opt.coeff_range, opt.coeff_range));
    bool dup = false;
    for (const auto& q : spec.polynomials) dup = dup || detail::same_polynomial(q, P);
    if (!dup) spec.polynomials.push_back(P);
  }
  const int nv = 1 + r * n;
  do {
    spec.f = MPoly<T>(nv);
    const int terms = uniform(1, opt.max_terms);
    for (int t = 0; t < terms; ++t) {
      Exponents e(static_cast<std::size_t>(nv), 0);
      const int d = uniform(1, opt.max_degree);
      for (int i = 0; i < d; ++i) ++e[static_cast<std::size_t>(uniform(0, nv - 1))];
      spec.f.add_term(std::move(e), from_int<T>(nonzero()));
    }
  } while (spec.f.is_zero_poly());
  return spec;
}

// ---------------------------------------------------------------------------
// Spec JSON:
//   {"f_terms": [{"x_exp": int, "z_exps": [int...], "coeff": [re, im]}...],
//    "polynomials": [[c0, c1, ...]...], "k": int, "mode": "SQA" | "SAT"}
// z_exps lists z_jl in the order j-major (z_11..z_1n, z_21..), length r n.

inline SimpleFunctionSpec<cplx> spec_from_json(const json& j) {
  try {
    SimpleFunctionSpec<cplx> spec;
    for (const auto& pj : j.at("polynomials")) {
      if (!pj.is_array() || pj.empty()) throw ValidationError("polynomial must be a non-empty coefficient list");
      std::vector<cplx> c;
      for (const auto& v : pj) c.push_back(complex_from_json(v));
      spec.polynomials.emplace_back(std::move(c));
    }
    const int n = spec.n();
    if (n < 1) throw InvalidPolynomial("need at least one polynomial");
    spec.k = j.value("k", 0);
    spec.mode = parse_probe_mode(j.value("mode", std::string("SQA")));
    const auto& terms = j.at("f_terms");
    if (!terms.is_array()) throw ValidationError("f_terms must be an array");
    int r = j.value("r", 0);
    for (const auto& t : terms) {
      const int len = static_cast<int>(t.at("z_exps").size());
      if (len % n != 0) throw ValidationError("z_exps length must be a multiple of the polynomial count");
      if (r == 0) r = len / n;
      if (len != r * n) throw ValidationError("inconsistent z_exps lengths");
    }
    if (r == 0) r = 1;
    spec.r = r;
    spec.f = MPoly<cplx>(1 + r * n);
    for (const auto& t : terms) {
      Exponents e;
      e.push_back(t.value("x_exp", 0));
      for (const auto& v : t.at("z_exps")) e.push_back(v.get<int>());
      for (int v : e) {
        if (v < 0) throw ValidationError("exponents must be >= 0");
      }
      spec.f.add_term(std::move(e), complex_from_json(t.at("coeff")));
    }
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed probe spec: ") + e.what());
  }
}

template <typename T>
json spec_to_json(const SimpleFunctionSpec<T>& spec) {
  json terms = json::array();
  for (const auto& [e, c] : spec.f.terms()) {
    json z = json::array();
    for (std::size_t v = 1; v < e.size(); ++v) z.push_back(e[v]);
    terms.push_back({{"x_exp", e[0]}, {"z_exps", z}, {"coeff", complex_to_json(to_cplx(c))}});
  }
  json polys = json::array();
  for (const auto& P : spec.polynomials) {
    json c = json::array();
    const int deg = std::max(0, detail::poly_degree(P));
    for (int i = 0; i <= deg; ++i) c.push_back(to_cplx(P.coeff(i)).real());
    polys.push_back(c);
  }
  return {{"f_terms", terms}, {"polynomials", polys}, {"k", spec.k}, {"mode", to_string(spec.mode)}, {"r", spec.r}};
}

inline json sat_result_to_json(const SatResult& s) {
  json j = {{"vanishes", s.vanishes}, {"order", s.order}, {"first_nonzero_order", s.first_nonzero_order}};
  if (!s.vanishes) j["coefficient"] = complex_to_json(s.coefficient);
  return j;
}

inline json sqa_result_to_json(const SqaResult& s) {
  json samples = json::array();
  for (const auto& x : s.samples) {
    samples.push_back({{"x", x.x}, {"phi", complex_to_json(x.phi)}, {"noise", x.noise}, {"cancellation", x.cancellation}});
  }
  json j = {{"samples", samples}, {"zero_count", s.zero_count}, {"resolved", s.resolved}};
  if (s.fit) j["exp_order_fit"] = exp_fit_to_json(*s.fit);
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

}  // namespace stokeslab
