#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "stokeslab/resum.hpp"
#include "test_support.hpp"

namespace stokeslab {
namespace {

using testing::bundled;
using testing::euler_series;

OdeSystem<ExactComplex> exact(const std::string& name) { return bundled(name).convert<ExactComplex>(); }

TEST(Borel, EulerCoefficientsAreOne) {
  auto b = borel_transform(formal_solution(exact("euler"), 30), 1);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].coeffs.order(), 29);
  for (int m = 0; m <= 29; ++m) EXPECT_EQ(b[0].coeffs[m], ExactComplex(1)) << m;
}

TEST(Borel, OddPumpIsRationalInTSquared) {
  auto b = borel_transform(formal_solution(exact("odd_pump"), 31), 2);
  for (int m = 0; m <= 30; ++m) {
    if (m % 2 == 1) {
      EXPECT_TRUE(is_zero(b[0].coeffs[m])) << m;
    } else {
      EXPECT_EQ(b[0].coeffs[m], ExactComplex(Rational(BigInt(1) << (m / 2)))) << m;
    }
  }
}

TEST(Borel, ZeroAndErrors) {
  auto b = borel_transform(TruncatedSeries<cplx>(10), 1);
  EXPECT_TRUE(b.coeffs.is_zero_series());
  EXPECT_THROW(borel_transform(TruncatedSeries<cplx>::constant(1.0, 4), 1), NonzeroConstantTerm);
}

TEST(Borel, NonIntegerGammaRatio) {
  // p = 2, h_2 = 1 gives b_1 = 1 / Gamma(3/2) = 2 / sqrt(pi).
  auto b = borel_transform(TruncatedSeries<cplx>::monomial(1.0, 2, 4), 2);
  EXPECT_NEAR(b.coeffs[1].real(), 2.0 / std::sqrt(kPi), 1e-15);
}

TEST(Gevrey, EulerOrderOne) {
  auto g = gevrey_estimate(euler_series<ExactComplex>(200));
  EXPECT_GE(g.kappa, 0.9);
  EXPECT_LE(g.kappa, 1.1);
  EXPECT_EQ(g.n_min, 50);
  EXPECT_EQ(g.n_max, 200);
}

TEST(Gevrey, OddPumpOrderOneHalf) {
  auto g = gevrey_estimate(formal_solution(exact("odd_pump"), 200)[0]);
  EXPECT_GE(g.kappa, 0.4);
  EXPECT_LE(g.kappa, 0.6);
}

TEST(Gevrey, GeometricIsConvergent) {
  TruncatedSeries<ExactComplex> s(200);
  BigInt pow2 = 1;
  for (int n = 0; n <= 200; ++n, pow2 <<= 1) s[n] = ExactComplex(Rational(pow2));
  auto g = gevrey_estimate(s);
  EXPECT_GE(g.kappa, -0.05);
  EXPECT_LE(g.kappa, 0.1);
}

TEST(Gevrey, TooFewCoefficients) {
  EXPECT_THROW(gevrey_estimate(euler_series<cplx>(20)), TooFewCoefficients);
  EXPECT_THROW(gevrey_estimate(TruncatedSeries<cplx>(100)), TooFewCoefficients);
}

BorelSeries<cplx> ones(int order) {
  TruncatedSeries<cplx> b(order);
  for (int m = 0; m <= order; ++m) b[m] = 1.0;
  return {1, b};
}

BorelSeries<cplx> inverse_one_minus_2t2(int order) {
  TruncatedSeries<cplx> b(order);
  for (int m = 0; m <= order; m += 2) b[m] = std::pow(2.0, m / 2);
  return {2, b};
}

TEST(Pade, GeometricOneOne) {
  // Hand solve: q1 * b_1 = -b_2 gives q1 = -1; numerator 1 + (b_1 - 1) t = 1.
  auto ra = pade(ones(10), 1, 1);
  ASSERT_EQ(ra.poles.size(), 1u);
  EXPECT_NEAR(std::abs(ra.poles[0].location - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ra.value(0.5) - 2.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ra.poles[0].residue + 1.0), 0.0, 1e-12);
}

TEST(Pade, EulerEightEightReducesToSimplePole) {
  auto ra = pade(borel_transform(formal_solution(bundled("euler"), 40), 1)[0], 8, 8);
  EXPECT_EQ(ra.M(), 1);
  ASSERT_EQ(ra.poles.size(), 1u);
  EXPECT_LT(std::abs(ra.poles[0].location - 1.0), 1e-8);
}

TEST(Pade, PoleStability) {
  for (int m = 5; m <= 12; ++m) {
    auto ra = pade(ones(30), m, m);
    for (const auto& p : ra.poles) EXPECT_LT(std::abs(p.location - 1.0), 1e-8) << m;
  }
}

TEST(Pade, OddPumpPoles) {
  for (int lm : {2, 4}) {
    auto ra = pade(inverse_one_minus_2t2(20), lm, lm);
    ASSERT_EQ(ra.poles.size(), 2u);
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<double> re{ra.poles[0].location.real(), ra.poles[1].location.real()};
    std::sort(re.begin(), re.end());
    EXPECT_NEAR(re[0], -s, 1e-8);
    EXPECT_NEAR(re[1], s, 1e-8);
    EXPECT_NEAR(s, 0.7071067812, 1e-10);
  }
}

TEST(Pade, ConstantHasNoPoles) {
  auto ra = pade(BorelSeries<cplx>{1, TruncatedSeries<cplx>::constant(3.0, 10)}, 4, 4);
  EXPECT_TRUE(ra.poles.empty());
  EXPECT_NEAR(std::abs(ra.value(7.0) - 3.0), 0.0, 1e-14);
}

TEST(Pade, OrderTooHigh) { EXPECT_THROW(pade(ones(5), 3, 3), ValidationError); }

TEST(Pade, ExactInputAgrees) {
  auto b = borel_transform(formal_solution(exact("euler"), 20), 1)[0];
  auto ra = pade(b, 4, 4);
  EXPECT_EQ(ra.M(), 1);
}

ClosedFormBorel constant_borel(cplx c) {
  return ClosedFormBorel("const", [c](cplx) { return c; }, {});
}

TEST(Laplace, ConstantKernelGivesZ) {
  auto one = constant_borel(1.0);
  auto v = laplace_sum(one, 1, 0.0, 0.3);
  EXPECT_NEAR(std::abs(v.value - 0.3), 0.0, 1e-15);
  // p = 2: integral of e^{-t^2/z^2} 2t/z dt = z
  auto v2 = laplace_sum(one, 2, 0.0, 0.3);
  EXPECT_NEAR(std::abs(v2.value - 0.3), 0.0, 1e-15);
  // complex z with a rotated ray
  const cplx z = std::polar(0.2, 0.4);
  auto v3 = laplace_sum(one, 1, 0.1, z);
  EXPECT_NEAR(std::abs(v3.value - z), 0.0, 1e-15);
}

TEST(Laplace, PowerKernelGivesGammaFactor) {
  // b_m t^m maps to Gamma(1 + m/p) z^{m+1}.
  ClosedFormBorel t3("t^3", [](cplx t) { return t * t * t; }, {});
  auto v = laplace_sum(t3, 2, 0.0, 0.4);
  EXPECT_NEAR(v.value.real(), std::tgamma(2.5) * std::pow(0.4, 4), 1e-15);
}

TEST(Laplace, EulerAgainstIndependentQuadrature) {
  auto handle = closed_form_borel("euler").value();
  const cplx z = std::polar(0.1, kPi / 4);
  const double theta = kPi / 2;
  auto v = laplace_sum(*handle[0], 1, theta, z);
  const cplx dir = std::polar(1.0, theta);
  auto integrand = [&](double s) {
    const cplx t = s * dir;
    return std::exp(-t / z) / (1.0 - t) * dir;
  };
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  const double re = gauss_kronrod<double, 61>::integrate([&](double s) { return integrand(s).real(); }, 0.0, inf, 15, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate([&](double s) { return integrand(s).imag(); }, 0.0, inf, 15, 1e-14);
  EXPECT_LT(std::abs(v.value - cplx(re, im)), 1e-8 * std::abs(cplx(re, im)));
  EXPECT_LT(v.est_error, 1e-12);
}

TEST(Laplace, Errors) {
  auto handle = closed_form_borel("euler").value();
  EXPECT_THROW(laplace_sum(*handle[0], 1, 0.0, 0.1), PoleOnRay);
  EXPECT_THROW(laplace_sum(*handle[0], 1, kPi, 0.1), NonDecayingIntegrand);
  // within the guard but off the ray
  EXPECT_THROW(laplace_sum(*handle[0], 1, 0.04, 0.1), PoleOnRay);
  EXPECT_NO_THROW(laplace_sum(*handle[0], 1, 0.06, 0.1));
}

TEST(Laplace, GrowingBorelExtendsRange) {
  // B = e^t, p = 1: integral is z / (1 - z) for Re(1/z) > 1.
  ClosedFormBorel ex("exp", [](cplx t) { return std::exp(t); }, {});
  auto v = laplace_sum(ex, 1, 0.0, 0.25);
  EXPECT_NEAR(std::abs(v.value - 0.25 / 0.75), 0.0, 1e-13);
  EXPECT_THROW(laplace_sum(ex, 1, 0.0, 2.0), NonDecayingIntegrand);
}

TEST(Lateral, EulerHalfResidueSplit) {
  Resummation rs(bundled("euler"), ResumOptions{}, closed_form_borel("euler"));
  auto lat = rs.lateral_sums(0, 0.1);
  const double half = kPi * std::exp(-10.0);
  EXPECT_NEAR(lat.minus[0].value.imag(), -half, 1e-12 * half + 1e-17);
  EXPECT_NEAR(lat.plus[0].value.imag(), half, 1e-12 * half + 1e-17);
  // principal value: e^{-1/x} Ei(1/x)
  const double pv = std::exp(-10.0) * boost::math::expint(10.0);
  EXPECT_NEAR(lat.minus[0].value.real(), pv, 1e-13);
  EXPECT_NEAR(lat.plus[0].value.real(), pv, 1e-13);
}

TEST(Lateral, NonsingularDirectionsAgree) {
  Resummation rs(bundled("euler"), ResumOptions{}, closed_form_borel("euler"));
  const cplx z = std::polar(0.1, kPi / 2);
  auto a = rs.along(kPi / 3, z);
  auto b = rs.along(2 * kPi / 3, z);
  EXPECT_LT(std::abs(a[0].value - b[0].value), 1e-14);
}

TEST(Jump, EulerMatchesResidueTheorem) {
  for (auto mode : {Continuation::Pade, Continuation::Auto}) {
    ResumOptions opt;
    opt.continuation.mode = mode;
    Resummation rs(bundled("euler"), opt);
    for (double x : {0.05, 0.1, 0.2}) {
      auto j = rs.jump(0, x);
      const cplx expected(0.0, kTwoPi * std::exp(-1.0 / x));
      EXPECT_LT(std::abs(j.value[0] - expected), 1e-10 * std::abs(expected)) << x;
    }
    EXPECT_NEAR(std::abs(rs.jump(0, 0.1).value[0]), 2.85255e-4, 5e-9);
  }
}

TEST(Jump, RotatingPairClosedForm) {
  Resummation rs(bundled("euler2d"));
  const auto& table = rs.directions();
  for (int d = 0; d < 2; ++d) {
    const double theta = table.theta(d);
    const cplx lambda = table.eigenvalues[static_cast<std::size_t>(table.entry(d).eigen_index)];
    // residue oracle: pi i e^{-lambda/z} (1, i) at pi/4, (1, -i) at 7pi/4
    const cplx second = theta < kPi ? cplx(0, 1) : cplx(0, -1);
    for (double rho : {0.04, 0.1, 0.25}) {
      const cplx z = std::polar(rho, theta);
      auto j = rs.jump(d, z);
      const cplx amp = cplx(0, kPi) * std::exp(-lambda / z);
      EXPECT_LT(std::abs(j.value[0] - amp), 1e-8 * std::abs(amp)) << d << " " << rho;
      EXPECT_LT(std::abs(j.value[1] - amp * second), 1e-8 * std::abs(amp)) << d << " " << rho;
    }
  }
}

TEST(Jump, AgreesWithLateralDifference) {
  Resummation rs(bundled("euler2d"));
  const cplx z = std::polar(0.2, kPi / 4);
  auto lat = rs.lateral_sums(0, z);
  auto j = rs.jump(0, z);
  for (int c = 0; c < 2; ++c) {
    EXPECT_LT(std::abs((lat.plus[c].value - lat.minus[c].value) - j.value[c]), 1e-14) << c;
  }
}

TEST(Jump, ConvergentSystemHasNone) {
  Resummation rs(bundled("convergent"));
  EXPECT_EQ(rs.borel(0).kind(), "taylor");
  for (double rho : {0.05, 0.1, 0.2}) {
    auto j = rs.jump(0, rho);
    EXPECT_LT(std::abs(j.value[0]), 10 * j.noise[0] + 1e-300);
  }
}

TEST(SectorSumTest, EulerSingleSectorRealOnNegativeAxis) {
  Resummation rs(bundled("euler"), ResumOptions{}, closed_form_borel("euler"));
  EXPECT_EQ(rs.directions().size(), 1);
  auto s = rs.sector_sum(0);
  auto v = s.values(-0.1);
  EXPECT_NEAR(v[0].imag(), 0.0, 1e-20);
  // x^2 y' = y - x at negative x: value close to the series partial sums
  EXPECT_NEAR(v[0].real(), -0.1 + 0.01 - 0.002 + 0.0006 - 0.00024 + 0.00012, 1e-4);
}

TEST(SectorSumTest, ConjugationSymmetry) {
  Resummation rs(bundled("euler"), ResumOptions{}, closed_form_borel("euler"));
  auto s = rs.sector_sum(0);
  const cplx z = std::polar(0.1, 0.5);
  EXPECT_LT(std::abs(s.values(std::conj(z))[0] - std::conj(s.values(z)[0])), 1e-15);
}

TEST(SectorSumTest, RotatingPairHasTwoOverlappingSectors) {
  Resummation rs(bundled("euler2d"));
  EXPECT_EQ(rs.directions().size(), 2);
  auto s0 = rs.sector_sum(0);
  auto s1 = rs.sector_sum(1);
  EXPECT_NEAR(s0.theta_lo(), kPi / 4, 1e-12);
  EXPECT_NEAR(s0.theta_hi(), 7 * kPi / 4, 1e-12);
  EXPECT_TRUE(s0.contains(kPi));
  EXPECT_FALSE(s0.contains(0.0));
  EXPECT_TRUE(s1.contains(0.0));
  EXPECT_FALSE(s1.contains(kPi));
  // both cover a neighbourhood of the singular direction pi/4
  EXPECT_TRUE(s0.contains(kPi / 4));
  EXPECT_TRUE(s1.contains(kPi / 4));
  EXPECT_THROW(s0.evaluate(0.1), OutOfSector);
}

TEST(SectorSumTest, ConvergentSystemMatchesAnalyticSum) {
  Resummation rs(bundled("convergent"));
  auto s = rs.sector_sum(0);
  for (double arg : {0.5, 1.5, kPi, 4.0, 5.8}) {
    const cplx z = std::polar(0.2, arg);
    EXPECT_LT(std::abs(s.values(z)[0] - z / (1.0 - z)), 1e-8) << arg;
  }
}

TEST(SectorSumTest, TaylorConsistencyWithGevreyBound) {
  Resummation rs(bundled("euler"), ResumOptions{}, closed_form_borel("euler"));
  auto s = rs.sector_sum(0);
  const auto h = euler_series<cplx>(12);
  for (double rho : {0.2, 0.1, 0.05}) {
    const cplx z = std::polar(rho, kPi / 2);
    const cplx v = s.values(z)[0];
    for (int n = 1; n <= 8; ++n) {
      const double rem = std::abs(v - partial_sum_eval(h, z, n));
      // |R_N| <= K A^N Gamma(N+1) |z|^{N+1}; on the imaginary axis K = A = 1 suffices
      EXPECT_LE(rem, std::tgamma(n + 1.0) * std::pow(rho, n + 1)) << rho << " " << n;
    }
  }
}

TEST(SectorSumTest, ConcurrentEvaluationMatchesSerial) {
  Resummation rs(bundled("euler2d"));
  auto s = rs.sector_sum(0);
  std::vector<cplx> zs;
  for (int i = 0; i < 8; ++i) zs.push_back(std::polar(0.05 + 0.02 * i, 2.0 + 0.2 * i));
  std::vector<std::vector<cplx>> serial;
  for (auto z : zs) serial.push_back(s.values(z));
  std::vector<std::vector<cplx>> parallel(zs.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < zs.size(); ++i) threads.emplace_back([&, i] { parallel[i] = s.values(zs[i]); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(serial, parallel);
}

TEST(ResumCsv, Header) {
  std::ostringstream os;
  write_resum_csv(os, {{cplx(0.1, 0.0), 0, {cplx(0.5, 0.25), 1e-16, 0.0}}});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "z_re,z_im,component,value_re,value_im,est_error");
  EXPECT_NE(os.str().find("0.10000000000000001,0,0,0.5,0.25,"), std::string::npos);
}

}  // namespace
}  // namespace stokeslab
