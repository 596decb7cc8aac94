#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stokeslab/io.hpp"
#include "stokeslab/series.hpp"
#include "test_support.hpp"

namespace stokeslab {
namespace {

using testing::euler_series;
using testing::max_abs_diff;
using testing::random_exact_series;
using testing::random_series;
using S = TruncatedSeries<cplx>;
using E = TruncatedSeries<ExactComplex>;

TEST(Series, AddCancelsAndKeepsIdentity) {
  S a({1.0, 1.0});
  S b({1.0, -1.0});
  EXPECT_EQ(a + b, S({2.0, 0.0}));
  EXPECT_EQ(a + S(1), a);

  E eu = euler_series<ExactComplex>(20);
  EXPECT_TRUE((eu + (-eu)).is_zero_series());
}

TEST(Series, MixedOrdersTruncateToMinimum) {
  S a(5);
  S b(3);
  EXPECT_EQ((a + b).order(), 3);
  EXPECT_EQ((a * b).order(), 3);
}

TEST(Series, RejectsNonFiniteCoefficients) {
  EXPECT_THROW(S({1.0, std::nan("")}), NonFiniteCoefficient);
  EXPECT_THROW(S(-1), OrderMismatch);
}

TEST(Series, ComposeGeometricWithScaledVariable) {
  const int n = 12;
  S geom(n);
  for (int k = 0; k <= n; ++k) geom[k] = 1.0;
  S two_x = S::monomial(2.0, 1, n);
  S out = compose(geom, two_x);
  for (int k = 0; k <= n; ++k) EXPECT_DOUBLE_EQ(out[k].real(), std::pow(2.0, k));
}

TEST(Series, ComposeWithZeroGivesConstant) {
  std::mt19937_64 rng(1);
  S f = random_series(rng, 10);
  S out = compose(f, S(10));
  EXPECT_EQ(out, S::constant(f[0], 10));
}

TEST(Series, ComposeRejectsConstantTerm) {
  EXPECT_THROW(compose(S({1.0, 1.0}), S({0.5, 1.0})), ComposeConstantTerm);
}

TEST(Series, ComposeEulerWithTwoX) {
  // Direct substitution oracle: E(2x) has coefficients (n-1)! 2^n.
  const int n = 20;
  E eu = euler_series<ExactComplex>(n);
  E out = compose(eu, E::monomial(ExactComplex(2), 1, n));
  for (int k = 1; k <= n; ++k) {
    BigInt expected = 1;
    for (int j = 2; j < k; ++j) expected *= j;
    expected <<= k;
    EXPECT_EQ(out[k], ExactComplex(Rational(expected))) << "k = " << k;
  }
  EXPECT_TRUE(is_zero(out[0]));
}

TEST(Series, JetKeepsLowCoefficients) {
  S phi({1.0, 1.0, 2.0, 6.0});
  EXPECT_EQ(jet(phi, 2), S({1.0, 1.0, 2.0, 0.0}));
  EXPECT_EQ(jet(phi, 0), S({1.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(jet(euler_series<cplx>(6), 3), S({0.0, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0}));
  EXPECT_THROW(jet(phi, 4), JetBeyondOrder);
  EXPECT_THROW(tail(phi, 4), JetBeyondOrder);
}

TEST(Series, TailOfEulerIsShiftedFactorials) {
  const int n = 15;
  E t1 = tail(euler_series<ExactComplex>(n), 1);
  EXPECT_EQ(t1.order(), n - 1);
  EXPECT_TRUE(is_zero(t1[0]));
  for (int m = 1; m <= n - 1; ++m) EXPECT_EQ(t1[m], factorial<ExactComplex>(m));

  std::mt19937_64 rng(2);
  S phi = random_series(rng, 9);
  S no_constant = phi;
  no_constant[0] = 0.0;
  EXPECT_EQ(tail(phi, 0), no_constant);
  EXPECT_TRUE(tail(S::monomial(1.0, 4, 9), 4).is_zero_series());
  EXPECT_EQ(tail(S::monomial(1.0, 5, 9), 4), S::monomial(1.0, 1, 5));
}

TEST(Series, ValuationAndDerivative) {
  S p(6);
  p[3] = 1.0;
  p[5] = 1.0;
  EXPECT_EQ(valuation(p), 3);
  EXPECT_EQ(valuation(S(4)), kInfiniteValuation);
  EXPECT_EQ(differentiate(p), S({0.0, 0.0, 3.0, 0.0, 5.0, 0.0}));
}

TEST(Series, PartialSumOfEuler) {
  cplx v = partial_sum_eval(euler_series<cplx>(10), cplx(0.1, 0.0), 3);
  EXPECT_NEAR(v.real(), 0.112, 1e-15);
  EXPECT_EQ(v.imag(), 0.0);
}

TEST(Series, ReciprocalAndPower) {
  S one_minus_x({1.0, -1.0, 0.0, 0.0, 0.0});
  S inv = one_minus_x.reciprocal();
  for (int k = 0; k <= 4; ++k) EXPECT_DOUBLE_EQ(inv[k].real(), 1.0);
  EXPECT_EQ(one_minus_x.pow(2), S({1.0, -2.0, 1.0, 0.0, 0.0}));
}

// Ring axioms, jet/tail decomposition and composition associativity, checked
// exactly on seeded random inputs.
TEST(SeriesProperties, RingAxiomsExact) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    E a = random_exact_series(rng, 8);
    E b = random_exact_series(rng, 8);
    E c = random_exact_series(rng, 8);
    EXPECT_EQ((a * b) * c, a * (b * c));
    EXPECT_EQ(a * (b + c), a * b + a * c);
    EXPECT_EQ(a * b, b * a);
  }
}

TEST(SeriesProperties, JetTailDecomposition) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    E phi = random_exact_series(rng, 12);
    for (int k = 0; k <= 12; ++k) {
      E rebuilt = jet(phi, k) + tail(phi, k).truncated(12).shifted(k);
      EXPECT_EQ(rebuilt, phi) << "k = " << k;
      if (k < 12) {
        // T_k = x a_{k+1} + x T_{k+1}
        E rhs = E::monomial(phi[k + 1], 1, 12 - k) + tail(phi, k + 1).truncated(12 - k).shifted(1);
        EXPECT_EQ(tail(phi, k), rhs) << "k = " << k;
      }
    }
  }
}

TEST(SeriesProperties, CompositionIsAssociative) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    E f = random_exact_series(rng, 7);
    E g = random_exact_series(rng, 7, 1);
    E h = random_exact_series(rng, 7, 1);
    EXPECT_EQ(compose(compose(f, g), h), compose(f, compose(g, h)));
  }
  // Floating mode agrees to rounding.
  S f = random_series(rng, 10);
  S g = random_series(rng, 10, 1);
  S h = random_series(rng, 10, 2);
  EXPECT_LT(max_abs_diff(compose(compose(f, g), h), compose(f, compose(g, h))), 1e-12);
}

TEST(SeriesJson, RoundTrip) {
  std::mt19937_64 rng(5);
  S s = random_series(rng, 6);
  EXPECT_EQ(series_from_json(series_to_json(s)), s);
  EXPECT_THROW(series_from_json(json::array()), ValidationError);
  EXPECT_THROW(series_from_json(json::parse("[[1,2,3]]")), ValidationError);
}

TEST(ExactComplex, ConversionsAreExact) {
  ExactComplex h = ExactComplex::from_cplx(cplx(0.5, -0.25));
  EXPECT_EQ(h, ExactComplex(Rational(1, 2), Rational(-1, 4)));
  EXPECT_EQ(to_cplx(h), cplx(0.5, -0.25));
  EXPECT_NEAR(log_abs(factorial<ExactComplex>(199)), std::lgamma(200.0), 1e-9);
}

}  // namespace
}  // namespace stokeslab
