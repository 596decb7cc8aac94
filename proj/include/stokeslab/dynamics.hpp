#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/fitting.hpp"
#include "stokeslab/io.hpp"
#include "stokeslab/odesys.hpp"
#include "stokeslab/parallel.hpp"
#include "stokeslab/series.hpp"

namespace stokeslab {

using State = std::vector<cplx>;

struct IntegratorOptions {
  double tol = 1e-10;            ///< local error per step, absolute plus relative
  double box = 10.0;             ///< BlowUp when max |y_i| exceeds this
  double clamp = 0.5;            ///< h <= clamp * x^(p+1) / ||A0||
  int points_per_decade = 64;    ///< output grid density
  long max_steps = 5'000'000;
  double min_step = 1e-13;       ///< relative to x
};

namespace detail {

// Dormand-Prince 5(4) tableau
struct Dopri5 {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

using Rhs = std::function<State(double, const State&)>;
using ErrorScale = std::function<double(std::size_t, const State&, const State&)>;
using StepLimit = std::function<double(double)>;

struct StepperStats {
  long steps = 0;
  long rejected = 0;
};

/// One adaptive DOPRI5 run from t0 to t1 (either direction). `h` carries the
/// step-size suggestion in and out. `limit(t)` caps |h|; `check(y)` may throw.
inline State dopri5(const Rhs& f, double t0, State y, double t1, double& h, double tol, const ErrorScale& scale,
                    const StepLimit& limit, const std::function<void(const State&)>& check, StepperStats& stats,
                    const IntegratorOptions& opt) {
  using D = Dopri5;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const std::size_t n = y.size();
  double t = t0;
  State k1 = f(t, y), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n);
  while (dir * (t1 - t) > 0.0) {
    if (stats.steps + stats.rejected > opt.max_steps) throw StepUnderflow("step budget exhausted at t = " + fmt17(t));
    double step = std::min({std::abs(h), std::abs(t1 - t), limit(t)});
    const double floor = opt.min_step * std::max(std::abs(t), 1e-300);
    if (step < floor && step < std::abs(t1 - t)) throw StepUnderflow("step size underflow at t = " + fmt17(t));
    const double hs = dir * step;
    auto stage = [&](State& out, std::initializer_list<std::pair<const State*, double>> terms) {
      for (std::size_t i = 0; i < n; ++i) {
        cplx acc = y[i];
        for (const auto& [k, a] : terms) acc += hs * a * (*k)[i];
        out[i] = acc;
      }
    };
    stage(tmp, {{&k1, D::a21}});
    k2 = f(t + D::c[1] * hs, tmp);
    stage(tmp, {{&k1, D::a31}, {&k2, D::a32}});
    k3 = f(t + D::c[2] * hs, tmp);
    stage(tmp, {{&k1, D::a41}, {&k2, D::a42}, {&k3, D::a43}});
    k4 = f(t + D::c[3] * hs, tmp);
    stage(tmp, {{&k1, D::a51}, {&k2, D::a52}, {&k3, D::a53}, {&k4, D::a54}});
    k5 = f(t + D::c[4] * hs, tmp);
    stage(tmp, {{&k1, D::a61}, {&k2, D::a62}, {&k3, D::a63}, {&k4, D::a64}, {&k5, D::a65}});
    k6 = f(t + hs, tmp);
    stage(y_new, {{&k1, D::b1}, {&k3, D::b3}, {&k4, D::b4}, {&k5, D::b5}, {&k6, D::b6}});
    const double t_new = std::abs(t1 - t) <= step ? t1 : t + hs;
    k7 = f(t_new, y_new);

    double err = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx e = hs * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] + D::e6 * k6[i] +
                           D::e7 * k7[i]);
      if (!is_finite(y_new[i]) || !is_finite(e)) finite = false;
      err = std::max(err, std::abs(e) / (tol * scale(i, y, y_new)));
    }
    if (!finite) {
      ++stats.rejected;
      h = 0.2 * step;
      continue;
    }
    if (err <= 1.0) {
      ++stats.steps;
      t = t_new;
      y.swap(y_new);
      k1.swap(k7);
      check(y);
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = step * grow;
    } else {
      ++stats.rejected;
      h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  return y;
}

inline double infinity_norm(const Matrix<cplx>& a) {
  double best = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (int j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
    best = std::max(best, row);
  }
  return best;
}

inline double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& c : v) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace detail

/// Geometric grid from x_start down to x_end (both included).
inline std::vector<double> geometric_grid(double x_start, double x_end, int points_per_decade) {
  if (!(x_end > 0.0 && x_end < x_start)) throw ValidationError("need 0 < x_end < x_start");
  if (points_per_decade < 1) throw ValidationError("points per decade must be >= 1");
  const double decades = std::log10(x_start / x_end);
  const int n = std::max(1, static_cast<int>(std::ceil(decades * points_per_decade - 1e-9)));
  std::vector<double> grid;
  for (int i = 0; i <= n; ++i) grid.push_back(i == n ? x_end : x_start * std::pow(x_end / x_start, double(i) / n));
  return grid;
}

/// Points per decade so that a rotation at `rate` / x^(p+1) gets at least
/// `per_turn` samples per turn down to x_min.
inline int required_points_per_decade(double rate, int p, double x_min, int per_turn = 16) {
  const double turns_per_decade = rate * std::pow(x_min, -p) * std::log(10.0) / kTwoPi;
  return std::max(1, static_cast<int>(std::ceil(per_turn * turns_per_decade)));
}

struct Trajectory {
  int p = 1;
  std::vector<double> grid;    ///< strictly decreasing
  std::vector<State> values;   ///< H(x_i)
  std::vector<double> step;    ///< accepted step size on arrival at x_i
  long steps = 0;
  long rejected = 0;
  double tol = 0.0;

  int r() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
  double x_max() const { return grid.front(); }
  double x_min() const { return grid.back(); }
};

/// Difference of two solutions integrated alongside a base solution:
/// d' = (A(x, y + d) - A(x, y)) / x^(p+1), with relative error control on d.
struct PairTrajectory {
  Trajectory base;
  std::vector<State> difference;  ///< G(x_i) - H(x_i)

  State other(std::size_t i) const {
    State g = base.values[i];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += difference[i][j];
    return g;
  }
};

namespace detail {

struct OdeContext {
  const OdeSystem<cplx>& sys;
  int p;
  double a0_norm;

  explicit OdeContext(const OdeSystem<cplx>& s) : sys(s), p(s.p()), a0_norm(infinity_norm(linear_part(s))) {}

  double limit(double x, const IntegratorOptions& opt) const {
    if (a0_norm == 0.0) return std::numeric_limits<double>::infinity();
    return opt.clamp * std::pow(x, p + 1) / a0_norm;
  }
};

template <typename Rhs, typename Scale, typename Check>
Trajectory run_on_grid(const OdeContext& ctx, const std::vector<double>& grid, State y, const Rhs& rhs,
                       const Scale& scale, const Check& check, const IntegratorOptions& opt,
                       std::vector<State>* aux = nullptr, std::size_t base_dim = 0) {
  Trajectory traj;
  traj.p = ctx.p;
  traj.tol = opt.tol;
  auto split = [&](const State& s) {
    if (aux == nullptr) return s;
    return State(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(base_dim));
  };
  auto rest = [&](const State& s) { return State(s.begin() + static_cast<std::ptrdiff_t>(base_dim), s.end()); };
  traj.grid.push_back(grid.front());
  traj.values.push_back(split(y));
  traj.step.push_back(0.0);
  if (aux != nullptr) aux->push_back(rest(y));
  double h = ctx.limit(grid.front(), opt);
  if (!std::isfinite(h)) h = 0.01 * (grid.front() - grid.back());
  StepperStats stats;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    y = dopri5(rhs, grid[i - 1], std::move(y), grid[i], h, opt.tol, scale,
               [&](double x) { return ctx.limit(x, opt); }, check, stats, opt);
    traj.grid.push_back(grid[i]);
    traj.values.push_back(split(y));
    traj.step.push_back(h);
    if (aux != nullptr) aux->push_back(rest(y));
  }
  traj.steps = stats.steps;
  traj.rejected = stats.rejected;
  return traj;
}

inline std::function<void(const State&)> box_check(double box, std::size_t dim) {
  return [box, dim](const State& y) {
    for (std::size_t i = 0; i < dim; ++i) {
      if (std::abs(y[i]) > box) {
        throw BlowUp("trajectory left the box |y| <= " + fmt17(box) + " (|y_" + std::to_string(i + 1) +
                     "| = " + fmt17(std::abs(y[i])) + ")");
      }
    }
  };
}

}  // namespace detail

/// Integrates x^(p+1) y' = A(x, y) from x_start down to x_end, recording the
/// geometric output grid.
inline Trajectory integrate(const OdeSystem<cplx>& sys, double x_start, const State& y_start, double x_end,
                            const IntegratorOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (static_cast<int>(y_start.size()) != sys.r()) throw ValidationError("initial value has wrong dimension");
  detail::OdeContext ctx(sys);
  const int p = sys.p();
  auto rhs = [&sys, p](double x, const State& y) {
    State a = sys.evaluate(cplx(x, 0.0), y);
    const double s = 1.0 / std::pow(x, p + 1);
    for (auto& v : a) v *= s;
    return a;
  };
  auto scale = [](std::size_t i, const State& y0, const State& y1) {
    return 1.0 + std::max(std::abs(y0[i]), std::abs(y1[i]));
  };
  return detail::run_on_grid(ctx, geometric_grid(x_start, x_end, opt.points_per_decade), y_start, rhs, scale,
                             detail::box_check(opt.box, y_start.size()), opt);
}

/// Same as integrate() but also carries G - H for a second solution G with
/// initial value y_start + d_start.
inline PairTrajectory integrate_pair(const OdeSystem<cplx>& sys, double x_start, const State& y_start,
                                     const State& d_start, double x_end, const IntegratorOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ValidationError("tolerance must be positive");
  const auto r = static_cast<std::size_t>(sys.r());
  if (y_start.size() != r || d_start.size() != r) throw ValidationError("initial value has wrong dimension");
  detail::OdeContext ctx(sys);
  const int p = sys.p();
  auto rhs = [&sys, p, r](double x, const State& s) {
    std::span<const cplx> y(s.data(), r);
    std::span<const cplx> d(s.data() + r, r);
    State a = sys.evaluate(cplx(x, 0.0), y);
    State da = sys.evaluate_difference(cplx(x, 0.0), y, d);
    const double sc = 1.0 / std::pow(x, p + 1);
    State out;
    out.reserve(2 * r);
    for (auto& v : a) out.push_back(v * sc);
    for (auto& v : da) out.push_back(v * sc);
    return out;
  };
  auto scale = [r](std::size_t i, const State& y0, const State& y1) {
    const double m = std::max(std::abs(y0[i]), std::abs(y1[i]));
    if (i < r) return 1.0 + m;
    // the difference is controlled relative to its own size
    double dm = 0.0;
    for (std::size_t j = r; j < y0.size(); ++j) dm = std::max({dm, std::abs(y0[j]), std::abs(y1[j])});
    return std::max(dm, std::numeric_limits<double>::min());
  };
  auto check = [box = opt.box, r](const State& s) {
    for (std::size_t i = 0; i < r; ++i) {
      if (std::abs(s[i]) > box || std::abs(s[i] + s[i + r]) > box) {
        throw BlowUp("trajectory pair left the box |y| <= " + fmt17(box));
      }
    }
  };
  State start = y_start;
  start.insert(start.end(), d_start.begin(), d_start.end());
  PairTrajectory out;
  out.base = detail::run_on_grid(ctx, geometric_grid(x_start, x_end, opt.points_per_decade), std::move(start), rhs,
                                 scale, check, opt, &out.difference, r);
  return out;
}

/// Seed J_N H(x) + offset. N < 0 truncates before the smallest term of the
/// first component (optimal truncation).
inline State partial_sum_seed(const SeriesVec<cplx>& h, double x, int order = -1, const State& offset = {}) {
  int n = order;
  if (n < 0) {
    n = h.order();
    double smallest = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= h.order(); ++k) {
      double term = 0.0;
      for (const auto& c : h) term = std::max(term, std::abs(c[k]) * std::pow(x, k));
      if (term == 0.0) continue;
      if (term < smallest) {
        smallest = term;
        n = k - 1;
      }
    }
  }
  State y = h.partial_sum(cplx(x, 0.0), std::min(n, h.order()));
  if (!offset.empty()) {
    if (offset.size() != y.size()) throw ValidationError("seed offset has wrong dimension");
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += offset[j];
  }
  return y;
}

/// H at an arbitrary point of the trajectory range, by integrating from the
/// nearest stored point above it.
inline State evaluate_at(const OdeSystem<cplx>& sys, const Trajectory& traj, double x,
                         const IntegratorOptions& opt = {}) {
  if (!(x >= traj.x_min() && x <= traj.x_max())) {
    throw RangeExceeded("x = " + fmt17(x) + " outside the trajectory range [" + fmt17(traj.x_min()) + ", " +
                        fmt17(traj.x_max()) + "]");
  }
  // grid is decreasing: last index with grid[i] >= x
  auto it = std::lower_bound(traj.grid.begin(), traj.grid.end(), x, std::greater<double>());
  std::size_t i = static_cast<std::size_t>(it - traj.grid.begin());
  if (i < traj.grid.size() && traj.grid[i] == x) return traj.values[i];
  --i;
  detail::OdeContext ctx(sys);
  const int p = sys.p();
  auto rhs = [&sys, p](double t, const State& y) {
    State a = sys.evaluate(cplx(t, 0.0), y);
    const double s = 1.0 / std::pow(t, p + 1);
    for (auto& v : a) v *= s;
    return a;
  };
  auto scale = [](std::size_t k, const State& y0, const State& y1) {
    return 1.0 + std::max(std::abs(y0[k]), std::abs(y1[k]));
  };
  double h = ctx.limit(traj.grid[i], opt);
  if (!std::isfinite(h)) h = traj.grid[i] - x;
  detail::StepperStats stats;
  IntegratorOptions o = opt;
  o.tol = traj.tol > 0.0 ? traj.tol : opt.tol;
  return detail::dopri5(rhs, traj.grid[i], traj.values[i], x, h, o.tol, scale,
                        [&](double t) { return ctx.limit(t, o); }, detail::box_check(o.box, traj.values[i].size()),
                        stats, o);
}

/// C_N = max over grid points in [x_lo, x_hi] of ||H(x) - J_N H^(x)|| / x^(N+1)
/// for N = 0..n_max (max norm over components).
inline std::vector<double> remainder_check(const Trajectory& traj, const SeriesVec<cplx>& h, int n_max,
                                           double x_lo = 0.0,
                                           double x_hi = std::numeric_limits<double>::infinity()) {
  if (n_max > h.order()) throw JetBeyondOrder("remainder order exceeds the series order");
  std::vector<double> out(static_cast<std::size_t>(n_max + 1), 0.0);
  for (std::size_t i = 0; i < traj.grid.size(); ++i) {
    const double x = traj.grid[i];
    if (x < x_lo || x > x_hi) continue;
    for (int n = 0; n <= n_max; ++n) {
      const State jn = h.partial_sum(cplx(x, 0.0), n);
      double diff = 0.0;
      for (std::size_t j = 0; j < jn.size(); ++j) diff = std::max(diff, std::abs(traj.values[i][j] - jn[j]));
      out[static_cast<std::size_t>(n)] = std::max(out[static_cast<std::size_t>(n)], diff / std::pow(x, n + 1));
    }
  }
  return out;
}

/// Phi_z(x, w): integral of dw/dz = (1 + x^p z)^(-p-1) A(x + x^(p+1) z, w)
/// from w(0) = w0.
inline State flow_map(const OdeSystem<cplx>& sys, double x, const State& w0, double z,
                      const IntegratorOptions& opt = {}) {
  if (z == 0.0) return w0;
  const int p = sys.p();
  const double xp = std::pow(x, p);
  auto rhs = [&sys, x, xp, p](double s, const State& w) {
    State a = sys.evaluate(cplx(x + x * xp * s, 0.0), w);
    const double f = std::pow(1.0 + xp * s, -(p + 1));
    for (auto& v : a) v *= f;
    return a;
  };
  auto scale = [](std::size_t k, const State& y0, const State& y1) {
    return 1.0 + std::max(std::abs(y0[k]), std::abs(y1[k]));
  };
  const double a0 = detail::infinity_norm(linear_part(sys));
  double h = a0 > 0.0 ? opt.clamp / a0 : std::abs(z);
  detail::StepperStats stats;
  return detail::dopri5(rhs, 0.0, w0, z, h, opt.tol, scale,
                        [&](double) { return a0 > 0.0 ? 1.0 / a0 : std::numeric_limits<double>::infinity(); },
                        detail::box_check(opt.box, w0.size()), stats, opt);
}

struct FlowCheckOptions {
  double x_lo = 0.05;
  double x_hi = 0.2;
  double z_max = 1.0;
  int z_points = 9;   ///< evenly spaced in [-z_max, z_max]
  int x_points = 12;  ///< grid points used, spread over [x_lo, x_hi]
  int threads = 1;
};

struct FlowCheck {
  double max_error = 0.0;
  double at_x = 0.0;
  double at_z = 0.0;
  int evaluations = 0;
};

/// max over (x, z) of ||H(x + x^(p+1) z) - Phi_z(x, H(x))||.
inline FlowCheck flow_identity_check(const OdeSystem<cplx>& sys, const Trajectory& traj,
                                     const FlowCheckOptions& fopt = {}, const IntegratorOptions& opt = {}) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < traj.grid.size(); ++i) {
    if (traj.grid[i] >= fopt.x_lo && traj.grid[i] <= fopt.x_hi) idx.push_back(i);
  }
  if (idx.empty()) throw ValidationError("no trajectory points in the flow-check window");
  if (static_cast<int>(idx.size()) > fopt.x_points && fopt.x_points > 1) {
    std::vector<std::size_t> pick;
    for (int k = 0; k < fopt.x_points; ++k) {
      pick.push_back(idx[static_cast<std::size_t>(std::lround(double(k) * (idx.size() - 1) / (fopt.x_points - 1)))]);
    }
    idx = pick;
  }
  std::vector<double> zs;
  for (int k = 0; k < fopt.z_points; ++k) {
    zs.push_back(fopt.z_points == 1 ? fopt.z_max : -fopt.z_max + 2.0 * fopt.z_max * k / (fopt.z_points - 1));
  }
  const int p = sys.p();
  for (std::size_t i : idx) {
    const double x = traj.grid[i];
    if (x + std::pow(x, p + 1) * fopt.z_max > traj.x_max()) {
      throw RangeExceeded("x + x^(p+1) z leaves the trajectory range at x = " + fmt17(x));
    }
  }
  IntegratorOptions o = opt;
  o.tol = traj.tol;
  std::vector<FlowCheck> per(idx.size());
  parallel_for(idx.size(), fopt.threads, [&](std::size_t k) {
    const std::size_t i = idx[k];
    const double x = traj.grid[i];
    FlowCheck& best = per[k];
    for (double z : zs) {
      const State direct = evaluate_at(sys, traj, x + std::pow(x, p + 1) * z, o);
      const State flowed = flow_map(sys, x, traj.values[i], z, o);
      double err = 0.0;
      for (std::size_t j = 0; j < direct.size(); ++j) err = std::max(err, std::abs(direct[j] - flowed[j]));
      ++best.evaluations;
      if (err >= best.max_error) {
        best.max_error = err;
        best.at_x = x;
        best.at_z = z;
      }
    }
  });
  FlowCheck out;
  for (const auto& c : per) {
    out.evaluations += c.evaluations;
    if (c.max_error >= out.max_error) {
      out.max_error = c.max_error;
      out.at_x = c.at_x;
      out.at_z = c.at_z;
    }
  }
  return out;
}

struct WindingOptions {
  double rate = 0.0;  ///< |Im lambda| of the linearized rotation; 0 skips the density check
  int p = 1;
  int per_turn = 16;
};

/// Total continuous change of arg v over the samples, in turns. With `x`
/// and a rate the sampling density is checked against rate / x^(p+1).
inline double winding(const std::vector<cplx>& v, const std::vector<double>& x = {},
                      const WindingOptions& opt = {}) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == cplx(0.0, 0.0) || !is_finite(v[i])) throw ZeroSample("sample " + std::to_string(i) + " is zero");
  }
  if (!x.empty() && x.size() != v.size()) throw ValidationError("sample and abscissa counts differ");
  double total = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double step = std::arg(v[i] / v[i - 1]);
    if (std::abs(step) > 0.75 * kPi) {
      throw UndersampledArc("argument jumps by " + fmt17(step) + " between samples " + std::to_string(i - 1) +
                            " and " + std::to_string(i));
    }
    if (!x.empty() && opt.rate > 0.0) {
      const double turns = opt.rate * std::abs(std::pow(x[i], -opt.p) - std::pow(x[i - 1], -opt.p)) /
                           (opt.p * kTwoPi);
      if (turns > 1.0 / opt.per_turn + 1e-12) {
        throw UndersampledArc("fewer than " + std::to_string(opt.per_turn) + " samples per turn near x = " +
                              fmt17(x[i]));
      }
    }
    total += step;
  }
  return total / kTwoPi;
}

/// Strict sign changes, skipping exact zeros.
inline int zero_count(const std::vector<double>& f) {
  int count = 0;
  int last = 0;
  for (double v : f) {
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Output

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "x";
  for (int j = 1; j <= traj.r(); ++j) os << ",y" << j << "_re,y" << j << "_im";
  os << ",step\n";
  for (std::size_t i = 0; i < traj.grid.size(); ++i) {
    os << fmt17(traj.grid[i]);
    for (const auto& v : traj.values[i]) os << ',' << fmt17(v.real()) << ',' << fmt17(v.imag());
    os << ',' << fmt17(traj.step[i]) << '\n';
  }
}

inline void write_pair_csv(std::ostream& os, const PairTrajectory& pair) {
  const int r = pair.base.r();
  os << "x";
  for (int j = 1; j <= r; ++j) os << ",h" << j << "_re,h" << j << "_im";
  for (int j = 1; j <= r; ++j) os << ",d" << j << "_re,d" << j << "_im";
  os << ",step\n";
  for (std::size_t i = 0; i < pair.base.grid.size(); ++i) {
    os << fmt17(pair.base.grid[i]);
    for (const auto& v : pair.base.values[i]) os << ',' << fmt17(v.real()) << ',' << fmt17(v.imag());
    for (const auto& v : pair.difference[i]) os << ',' << fmt17(v.real()) << ',' << fmt17(v.imag());
    os << ',' << fmt17(pair.base.step[i]) << '\n';
  }
}

inline json trajectory_stats_to_json(const Trajectory& traj) {
  return {{"points", traj.grid.size()},
          {"x_max", traj.x_max()},
          {"x_min", traj.x_min()},
          {"steps", traj.steps},
          {"rejected", traj.rejected},
          {"tol", traj.tol}};
}

inline json exp_fit_to_json(const ExponentialOrderFit& f) {
  return {{"a", f.a}, {"k", f.k}, {"c", f.c}, {"rms_residual", f.rms_residual}};
}

/// Diagnostics bundle for the JSON report. Absent entries are omitted.
struct DynamicsDiagnostics {
  std::optional<json> trajectory;
  std::vector<double> remainder;  ///< C_N, N = 0..
  std::optional<FlowCheck> flow;
  std::optional<double> winding;
  std::optional<int> zero_count;
  std::optional<ExponentialOrderFit> fit;
};

inline json diagnostics_to_json(const DynamicsDiagnostics& d) {
  json j = json::object();
  if (d.trajectory) j["trajectory"] = *d.trajectory;
  if (!d.remainder.empty()) {
    json t = json::array();
    for (std::size_t n = 0; n < d.remainder.size(); ++n) t.push_back({{"N", n}, {"C", d.remainder[n]}});
    j["remainder"] = t;
  }
  if (d.flow) {
    j["flow_identity"] = {{"max_error", d.flow->max_error},
                          {"at_x", d.flow->at_x},
                          {"at_z", d.flow->at_z},
                          {"evaluations", d.flow->evaluations}};
  }
  if (d.winding) j["winding_turns"] = *d.winding;
  if (d.zero_count) j["zero_count"] = *d.zero_count;
  if (d.fit) j["exp_order_fit"] = exp_fit_to_json(*d.fit);
  return j;
}

}  // namespace stokeslab
