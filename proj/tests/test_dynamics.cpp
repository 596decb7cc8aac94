#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stokeslab/dynamics.hpp"
#include "stokeslab/resum.hpp"
#include "test_support.hpp"

namespace stokeslab {
namespace {

using testing::bundled;

Trajectory euler_trajectory(double tol = 1e-10, double x_end = 0.02) {
  auto sys = bundled("euler");
  auto h = formal_solution(sys, 30);
  IntegratorOptions opt;
  opt.tol = tol;
  return integrate(sys, 0.3, partial_sum_seed(h, 0.3), x_end, opt);
}

TEST(Grid, GeometricSpacing) {
  auto g = geometric_grid(1.0, 0.01, 64);
  ASSERT_EQ(g.size(), 129u);
  EXPECT_EQ(g.front(), 1.0);
  EXPECT_EQ(g.back(), 0.01);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_LT(g[i], g[i - 1]);
    EXPECT_NEAR(g[i - 1] / g[i], std::pow(10.0, 1.0 / 64), 1e-12);
  }
  EXPECT_THROW(geometric_grid(0.1, 0.2, 64), ValidationError);
  EXPECT_THROW(geometric_grid(0.1, 0.0, 64), ValidationError);
}

TEST(Integrate, TrajectoryInvariants) {
  auto t = euler_trajectory();
  EXPECT_EQ(t.grid.front(), 0.3);
  EXPECT_EQ(t.grid.back(), 0.02);
  for (std::size_t i = 1; i < t.grid.size(); ++i) EXPECT_LT(t.grid[i], t.grid[i - 1]);
  for (const auto& v : t.values) {
    ASSERT_EQ(v.size(), 1u);
    EXPECT_TRUE(is_finite(v[0]));
  }
  EXPECT_GT(t.steps, 0);
  EXPECT_EQ(t.tol, 1e-10);
}

TEST(Integrate, EulerApproachesBorelSum) {
  auto sys = bundled("euler");
  auto t = euler_trajectory(1e-12);
  Resummation rs(sys);
  const double d0 = std::abs(t.values[0][0].real() - rs.lateral_sums(0, 0.3).minus[0].value.real());
  std::vector<double> xs;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < t.grid.size(); i += 4) {
    const double x = t.grid[i];
    const double borel = rs.lateral_sums(0, x).minus[0].value.real();
    const double diff = std::abs(t.values[i][0].real() - borel);
    // homogeneous solutions are C e^{-1/x}
    EXPECT_LE(diff, 1e-6 + 1.01 * d0 * std::exp(1.0 / 0.3 - 1.0 / x)) << x;
    EXPECT_LT(std::abs(t.values[i][0].imag()), 1e-14);
    if (x >= 0.06) {
      xs.push_back(x);
      diffs.push_back(diff);
    }
  }
  auto fit = exp_order_fit(xs, diffs);
  EXPECT_EQ(fit.k, 1.0);
  EXPECT_NEAR(fit.a, 1.0, 1e-2);
}

TEST(Integrate, RotatingPairDecaysToZero) {
  auto sys = bundled("euler2d");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int trial = 0; trial < 5; ++trial) {
    auto t = integrate(sys, 0.3, {u(rng), u(rng)}, 0.005);
    const auto& end = t.values.back();
    EXPECT_LT(std::max(std::abs(end[0]), std::abs(end[1])), 0.01);
  }
}

TEST(Integrate, RepellingSystemBlowsUp) {
  auto sys = system_from_json(json::parse(R"({"p": 1, "r": 1, "terms": [{"x_exp": 0, "y_exps": [1], "coeff": [-1, 0]}]})"));
  EXPECT_THROW(integrate(sys, 0.3, {0.1}, 0.02), BlowUp);
}

TEST(Integrate, RejectsBadArguments) {
  auto sys = bundled("euler");
  EXPECT_THROW(integrate(sys, 0.3, {0.1}, 0.5), ValidationError);
  EXPECT_THROW(integrate(sys, 0.3, {0.1, 0.2}, 0.1), ValidationError);
  IntegratorOptions opt;
  opt.tol = 0.0;
  EXPECT_THROW(integrate(sys, 0.3, {0.1}, 0.1, opt), ValidationError);
}

TEST(Integrate, EvaluateAtMatchesFinerRun) {
  auto sys = bundled("euler2d");
  auto t = integrate(sys, 0.3, {0.05, -0.02}, 0.05);
  const double target = 0.1234;
  auto direct = integrate(sys, 0.3, {0.05, -0.02}, target);
  auto v = evaluate_at(sys, t, target);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(v[j] - direct.values.back()[j]), 0.0, 1e-9);
  EXPECT_THROW(evaluate_at(sys, t, 0.01), RangeExceeded);
}

TEST(Remainder, EulerConstants) {
  auto sys = bundled("euler");
  auto h = formal_solution(sys, 30);
  auto t = euler_trajectory();
  auto c = remainder_check(t, h, 8, 0.04, 0.1);
  for (double v : c) EXPECT_TRUE(std::isfinite(v));
  // factorial growth: ratios increase
  for (int n = 1; n + 1 <= 8; ++n) EXPECT_GT(c[n + 1] / c[n], c[n] / c[n - 1]) << n;
  // zero expansion: C_0 = sup |H/x| ~ 1 + O(x)
  auto zero = remainder_check(t, SeriesVec<cplx>(1, 10), 0, 0.0, 0.1);
  EXPECT_GT(zero[0], 1.0);
  EXPECT_LT(zero[0], 1.2);
}

TEST(Remainder, ConvergentStaysBounded) {
  auto sys = bundled("convergent");
  auto h = formal_solution(sys, 20);
  IntegratorOptions opt;
  opt.tol = 1e-12;
  auto t = integrate(sys, 0.3, {0.3 / 0.7}, 0.02, opt);
  auto c = remainder_check(t, h, 5, 0.04, 0.1);
  double x_top = 0.0;
  for (double x : t.grid) {
    if (x <= 0.1) x_top = std::max(x_top, x);
  }
  // H - J_N H = x^{N+1} / (1 - x)
  for (double v : c) EXPECT_NEAR(v, 1.0 / (1.0 - x_top), 1e-6);
}

TEST(Remainder, TrajectoryFamilyShareExpansion) {
  auto sys = bundled("euler2d");
  auto h = formal_solution(sys, 30);
  auto a = integrate(sys, 0.3, partial_sum_seed(h, 0.3), 0.02);
  auto b = integrate(sys, 0.3, partial_sum_seed(h, 0.3, -1, {1e-3, -2e-3}), 0.02);
  auto ca = remainder_check(a, h, 8, 0.04, 0.1);
  auto cb = remainder_check(b, h, 8, 0.04, 0.1);
  for (int n = 0; n <= 8; ++n) {
    EXPECT_GT(cb[n] / ca[n], 0.5) << n;
    EXPECT_LT(cb[n] / ca[n], 2.0) << n;
  }
}

TEST(FlowIdentity, ZeroShiftIsExact) {
  auto sys = bundled("euler");
  auto t = euler_trajectory();
  FlowCheckOptions f;
  f.z_max = 0.0;
  f.z_points = 1;
  EXPECT_EQ(flow_identity_check(sys, t, f).max_error, 0.0);
}

TEST(FlowIdentity, EulerAndRotatingPair) {
  for (const char* name : {"euler", "euler2d"}) {
    auto sys = bundled(name);
    auto h = formal_solution(sys, 30);
    auto t = integrate(sys, 0.3, partial_sum_seed(h, 0.3), 0.02);
    auto check = flow_identity_check(sys, t);
    EXPECT_LT(check.max_error, 1e-7) << name;
    EXPECT_GT(check.evaluations, 50);
  }
}

TEST(FlowIdentity, ErrorScalesWithTolerance) {
  auto sys = bundled("euler2d");
  auto h = formal_solution(sys, 30);
  double err[2];
  for (int k = 0; k < 2; ++k) {
    IntegratorOptions opt;
    opt.tol = k == 0 ? 1e-10 : 1e-8;
    auto t = integrate(sys, 0.3, partial_sum_seed(h, 0.3), 0.02, opt);
    err[k] = flow_identity_check(sys, t, {}, opt).max_error;
  }
  const double ratio = err[1] / err[0];
  EXPECT_GT(ratio, 10.0);
  EXPECT_LT(ratio, 1000.0);
}

TEST(FlowIdentity, ParallelMatchesSerial) {
  auto sys = bundled("euler2d");
  auto t = integrate(sys, 0.3, {0.01, 0.02}, 0.02);
  FlowCheckOptions f;
  auto a = flow_identity_check(sys, t, f);
  f.threads = 4;
  auto b = flow_identity_check(sys, t, f);
  EXPECT_EQ(a.max_error, b.max_error);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Winding, ConstantAndClosedForm) {
  EXPECT_EQ(winding(std::vector<cplx>(10, cplx(1.0, 2.0))), 0.0);
  auto x = geometric_grid(0.3, 0.02, required_points_per_decade(1.0, 1, 0.02));
  std::vector<cplx> v;
  for (double xi : x) v.push_back(std::polar(1.0, 1.0 / xi));
  const double expected = (1.0 / 0.02 - 1.0 / 0.3) / kTwoPi;
  EXPECT_NEAR(winding(v, x, {1.0, 1, 16}), expected, 1e-9);
  EXPECT_NEAR(expected, 7.43, 0.005);
}

TEST(Winding, Errors) {
  EXPECT_THROW(winding({1.0, 0.0, 1.0}), ZeroSample);
  EXPECT_THROW(winding({1.0, -1.0}), UndersampledArc);
  auto x = geometric_grid(0.3, 0.02, 64);
  std::vector<cplx> v;
  for (double xi : x) v.push_back(std::polar(1.0, 1.0 / xi));
  EXPECT_THROW(winding(v, x, {1.0, 1, 16}), UndersampledArc);
}

TEST(ZeroCount, SineOfReciprocal) {
  auto x = geometric_grid(0.3, 0.02, 512);
  std::vector<double> f;
  for (double xi : x) f.push_back(std::sin(1.0 / xi));
  EXPECT_EQ(zero_count(f), 14);
  EXPECT_EQ(zero_count({1.0, 2.0, 0.5}), 0);
  EXPECT_EQ(zero_count({1.0, 0.0, 2.0, 0.0, -1.0}), 1);
}

TEST(Linking, RotatingPairWinds) {
  auto sys = bundled("euler2d");
  auto h = formal_solution(sys, 30);
  IntegratorOptions opt;
  opt.points_per_decade = required_points_per_decade(1.0, 1, 0.02);
  auto pair = integrate_pair(sys, 0.3, partial_sum_seed(h, 0.3), {1e-3, 0.0}, 0.02, opt);
  std::vector<cplx> v;
  std::vector<double> d1;
  for (const auto& d : pair.difference) {
    v.push_back(cplx(d[0].real(), d[1].real()));
    d1.push_back(d[0].real());
  }
  const double turns = winding(v, pair.base.grid, {1.0, 1, 16});
  const double expected = (1.0 / 0.02 - 1.0 / 0.3) / kTwoPi;
  EXPECT_GE(turns, 5.0);
  EXPECT_LT(std::abs(turns - expected), 0.2 * expected);
  EXPECT_GE(zero_count(d1), 10);

  // the difference keeps full relative accuracy down to e^{-50}
  const double tiny = std::abs(pair.difference.back()[0]);
  EXPECT_GT(tiny, 0.0);
  EXPECT_LT(tiny, 1e-15);

  // truncating at larger x_min strictly decreases the turns
  double previous = turns;
  for (double x_min : {0.03, 0.05, 0.1}) {
    std::vector<cplx> part;
    std::vector<double> xs;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (pair.base.grid[i] >= x_min) {
        part.push_back(v[i]);
        xs.push_back(pair.base.grid[i]);
      }
    }
    const double t = winding(part, xs);
    EXPECT_LT(t, previous);
    previous = t;
  }
}

TEST(ExpOrderFit, ClosedForms) {
  std::vector<double> x;
  std::vector<double> a;
  std::vector<double> b;
  for (int i = 0; i < 16; ++i) {
    const double xi = 0.05 * std::pow(8.0, i / 15.0);
    x.push_back(xi);
    a.push_back(std::exp(-1.0 / xi));
    b.push_back(std::exp(-2.0 / (xi * xi)));
  }
  auto fa = exp_order_fit(x, a);
  EXPECT_EQ(fa.k, 1.0);
  EXPECT_NEAR(fa.a, 1.0, 1e-10);
  auto fb = exp_order_fit(x, b);
  EXPECT_EQ(fb.k, 2.0);
  EXPECT_NEAR(fb.a, 2.0, 1e-10);
}

TEST(Output, TrajectoryCsvAndDiagnostics) {
  auto t = euler_trajectory(1e-10, 0.1);
  std::ostringstream os;
  write_trajectory_csv(os, t);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "x,y1_re,y1_im,step");
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), t.grid.size() + 1);
  DynamicsDiagnostics d;
  d.trajectory = trajectory_stats_to_json(t);
  d.remainder = {1.0, 2.0};
  d.winding = 3.5;
  auto j = diagnostics_to_json(d);
  EXPECT_EQ(j["remainder"].size(), 2u);
  EXPECT_EQ(j["winding_turns"].get<double>(), 3.5);
  EXPECT_FALSE(j.contains("zero_count"));
}

}  // namespace
}  // namespace stokeslab
