#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "stokeslab/io.hpp"
#include "stokeslab/odesys.hpp"
#include "test_support.hpp"

namespace stokeslab {
namespace {

using testing::bundled;

OdeSystem<ExactComplex> exact(const std::string& name) { return bundled(name).convert<ExactComplex>(); }

BigInt big_factorial(int n) {
  BigInt f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

TEST(FormalSolution, EulerIsFactorials) {
  auto h = formal_solution(exact("euler"), 40);
  EXPECT_TRUE(is_zero(h[0][0]));
  for (int n = 1; n <= 40; ++n) EXPECT_EQ(h[0][n], ExactComplex(Rational(big_factorial(n - 1)))) << n;
}

TEST(FormalSolution, RotatingPairMatchesClosedForm) {
  // H1 + i H2 has coefficients (n-1)! (1 - i)^(-n).
  auto h = formal_solution(exact("euler2d"), 30);
  const ExactComplex w = ExactComplex(1) / ExactComplex(Rational(1), Rational(-1));
  ExactComplex wn = 1;
  for (int n = 1; n <= 30; ++n) {
    wn *= w;
    ExactComplex expected = ExactComplex(Rational(big_factorial(n - 1))) * wn;
    EXPECT_EQ(h[0][n], ExactComplex(expected.real())) << n;
    EXPECT_EQ(h[1][n], ExactComplex(expected.imag())) << n;
  }
  EXPECT_EQ(h[0][1], ExactComplex(Rational(1, 2)));
  EXPECT_EQ(h[1][1], ExactComplex(Rational(1, 2)));
}

TEST(FormalSolution, OddPumpHasOnlyOddTerms) {
  auto h = formal_solution(exact("odd_pump"), 21);
  // c_{2m+1} = 2^m m!
  for (int n = 0; n <= 21; ++n) {
    if (n % 2 == 0) {
      EXPECT_TRUE(is_zero(h[0][n])) << n;
    } else {
      const int m = (n - 1) / 2;
      EXPECT_EQ(h[0][n], ExactComplex(Rational(big_factorial(m) << m))) << n;
    }
  }
  EXPECT_EQ(h[0][7], ExactComplex(48));
}

TEST(FormalSolution, ConvergentSystemIsGeometric) {
  auto h = formal_solution(exact("convergent"), 25);
  for (int n = 1; n <= 25; ++n) EXPECT_EQ(h[0][n], ExactComplex(1)) << n;
}

TEST(FormalSolution, ScaledCopyInCounterexample) {
  auto h = formal_solution(exact("counterexample"), 20);
  auto base = formal_solution(exact("euler2d"), 20);
  for (int n = 1; n <= 20; ++n) {
    EXPECT_EQ(h[0][n], base[0][n]);
    EXPECT_EQ(h[2][n], ExactComplex(Rational(BigInt(1) << n)) * base[0][n]) << n;
    EXPECT_EQ(h[3][n], ExactComplex(Rational(BigInt(1) << n)) * base[1][n]) << n;
  }
  auto d = formal_solution(exact("counterexample_diff"), 10);
  for (int j = 2; j < 4; ++j) EXPECT_TRUE(d[j].is_zero_series());
}

TEST(FormalSolution, ResidualVanishesExactly) {
  for (const char* name : {"euler", "euler2d", "odd_pump", "convergent", "euler_pair", "counterexample"}) {
    auto sys = exact(name);
    auto h = formal_solution(sys, 18);
    auto res = residual(sys, h);
    for (const auto& c : res) EXPECT_TRUE(c.is_zero_series()) << name;
  }
}

TEST(FormalSolution, FloatingMatchesExact) {
  auto hf = formal_solution(bundled("euler2d"), 25);
  auto he = formal_solution(exact("euler2d"), 25);
  for (int j = 0; j < 2; ++j) {
    for (int n = 1; n <= 25; ++n) {
      cplx e = to_cplx(he[j][n]);
      EXPECT_LE(std::abs(hf[j][n] - e), 1e-13 * std::abs(e) + 1e-300) << j << "," << n;
    }
  }
}

TEST(FormalSolution, SingularLinearPartRejected) {
  MPoly<cplx> a(2);
  a.add_term({0, 2}, 1.0);
  a.add_term({1, 0}, -1.0);
  OdeSystem<cplx> sys(1, 1, {a});
  EXPECT_THROW(formal_solution(sys, 5), SingularLinearPart);
}

TEST(OdeSystemTest, ValidatesShape) {
  MPoly<cplx> a(2);
  a.add_term({0, 0}, 1.0);
  EXPECT_THROW(OdeSystem<cplx>(1, 1, {a}), InvalidSystem);
  EXPECT_THROW(OdeSystem<cplx>(0, 1, {MPoly<cplx>(2)}), InvalidSystem);
  EXPECT_THROW(OdeSystem<cplx>(1, 2, {MPoly<cplx>(3)}), InvalidSystem);
  EXPECT_THROW(OdeSystem<cplx>(1, 1, {MPoly<cplx>(3)}), InvalidSystem);
}

TEST(OdeSystemTest, JsonRoundTripAndErrors) {
  auto sys = bundled("counterexample");
  auto again = system_from_json(system_to_json(sys));
  for (int i = 0; i < sys.r(); ++i) EXPECT_EQ(sys.rhs(i), again.rhs(i));
  EXPECT_THROW(system_from_json(json::parse(R"({"p":1,"r":2,"terms":[{"x_exp":0,"y_exps":[1,0],"coeff":[1,0]}]})")),
               InvalidSystem);
  EXPECT_THROW(system_from_json(json::parse(R"({"p":1})")), InvalidSystem);
  EXPECT_THROW(load_system(testing::data_path("missing.json")), ValidationError);
}

TEST(OdeSystemTest, DifferenceEvaluationMatchesDirect) {
  std::vector<MPoly<cplx>> rhs(2, MPoly<cplx>(3));
  rhs[0].add_term({0, 2, 1}, cplx(0.5, 1.0));
  rhs[0].add_term({1, 1, 0}, 2.0);
  rhs[1].add_term({0, 0, 3}, -1.0);
  rhs[1].add_term({2, 0, 0}, 1.0);
  OdeSystem<cplx> sys(1, 2, rhs);
  const cplx x(0.3, 0.1);
  std::vector<cplx> y{cplx(0.2, -0.4), cplx(-0.7, 0.3)};
  std::vector<cplx> d{cplx(1e-3, 2e-3), cplx(-4e-3, 1e-3)};
  std::vector<cplx> yd{y[0] + d[0], y[1] + d[1]};
  auto direct_a = sys.evaluate(x, yd);
  auto direct_b = sys.evaluate(x, y);
  auto diff = sys.evaluate_difference(x, y, d);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(std::abs(diff[i] - (direct_a[i] - direct_b[i])), 0.0, 1e-15);

  // Far below rounding of |y| the difference stays relatively accurate.
  std::vector<cplx> tiny{cplx(1e-30, 0.0), cplx(0.0, 0.0)};
  auto small = sys.evaluate_difference(x, y, tiny);
  // d/dy1 of component 0 is 2*(0.5+i)*y1*y2 + 2x
  cplx expected = (2.0 * cplx(0.5, 1.0) * y[0] * y[1] + 2.0 * x) * 1e-30;
  EXPECT_LT(std::abs(small[0] - expected), 1e-12 * std::abs(expected));
}

TEST(Spectrum, RotatingPairDirections) {
  auto sys = bundled("euler2d");
  auto spec = eigenvalues(linear_part(sys));
  ASSERT_EQ(spec.eigenvalues.size(), 2u);
  EXPECT_NEAR(std::abs(spec.eigenvalues[0] - cplx(1, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(spec.eigenvalues[1] - cplx(1, -1)), 0.0, 1e-12);
  EXPECT_TRUE(check_distinct_arguments(spec).holds);
  auto table = singular_directions(1, spec);
  ASSERT_EQ(table.size(), 2);
  EXPECT_NEAR(table.theta(0), kPi / 4, 1e-12);
  EXPECT_NEAR(table.theta(1), 7 * kPi / 4, 1e-12);
  EXPECT_NEAR(table.theta(2), kPi / 4 + kTwoPi, 1e-12);
  EXPECT_NEAR(table.theta(-1), 7 * kPi / 4 - kTwoPi, 1e-12);
  EXPECT_NEAR(table.gap(0), kPi / 2, 1e-12);
}

TEST(Spectrum, RankTwoHasOppositeDirections) {
  auto sys = bundled("odd_pump");
  auto table = singular_directions(sys.p(), eigenvalues(linear_part(sys)));
  ASSERT_EQ(table.size(), 2);
  EXPECT_NEAR(table.theta(0), 0.0, 1e-12);
  EXPECT_NEAR(table.theta(1), kPi, 1e-12);
  EXPECT_EQ(table.entry(1).sheet, 1);
}

TEST(Spectrum, DistinctArgumentFailures) {
  Matrix<cplx> same(2, 2);
  same(0, 0) = 1.0;
  same(1, 1) = 2.0;
  auto c = check_distinct_arguments(eigenvalues(same));
  EXPECT_FALSE(c.holds);
  EXPECT_FALSE(c.zero_eigenvalue);

  Matrix<cplx> zero(2, 2);
  zero(0, 0) = 1.0;
  auto z = check_distinct_arguments(eigenvalues(zero));
  EXPECT_FALSE(z.holds);
  EXPECT_TRUE(z.zero_eigenvalue);
  EXPECT_THROW(singular_directions(1, eigenvalues(zero)), ValidationError);
}

TEST(Spectrum, EigenvectorsOfRealMatrixAreConjugate) {
  auto a0 = linear_part(bundled("euler2d"));
  auto v1 = eigenvector(a0, cplx(1, 1));
  auto v2 = eigenvector(a0, cplx(1, -1));
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(std::abs(v1[i] - std::conj(v2[i])), 0.0, 1e-12);
  // A v = lambda v
  auto av = a0.apply(v1);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(std::abs(av[i] - cplx(1, 1) * v1[i]), 0.0, 1e-12);
}

TEST(TailSystem, SolvedByTailOfFormalSolution) {
  for (const char* name : {"euler", "euler2d", "odd_pump", "convergent"}) {
    auto sys = exact(name);
    auto h = formal_solution(sys, 24);
    for (int k : {1, 2, 5}) {
      auto tk = tail_system(sys, h, k);
      auto ht = formal_solution(tk, 24 - k);
      EXPECT_EQ(ht, tail(h, k)) << name << " k=" << k;
    }
  }
}

TEST(TailSystem, EulerTailExplicit) {
  // k = 1: x^2 w' = w + x (1 - ... ) ; coefficient of w is 1 - x.
  auto sys = exact("euler");
  auto t1 = tail_system(sys, formal_solution(sys, 5), 1);
  EXPECT_EQ(t1.rhs(0).coeff({0, 1}), ExactComplex(1));
  EXPECT_EQ(t1.rhs(0).coeff({1, 1}), ExactComplex(-1));
  EXPECT_EQ(t1.rhs(0).coeff({1, 0}), ExactComplex(-1));
}

TEST(TailSystem, FloatingModeAgrees) {
  auto sys = bundled("euler2d");
  auto h = formal_solution(sys, 20);
  auto t3 = tail_system(sys, h, 3);
  auto ht = formal_solution(t3, 17);
  auto expected = tail(h, 3);
  for (int j = 0; j < 2; ++j) {
    double scale = 0.0;
    for (int n = 0; n <= 17; ++n) scale = std::max(scale, std::abs(expected[j][n]));
    EXPECT_LT(testing::max_abs_diff(ht[j], expected[j]), 1e-9 * scale);
  }
}

TEST(FormalFlow, DefectVanishesExactly) {
  for (const char* name : {"euler", "euler2d", "odd_pump"}) {
    auto sys = exact(name);
    auto flow = formal_flow(sys, FlowOrders{10, 10, 10});
    auto defect = formal_flow_defect(flow, formal_solution(sys, 12), 10);
    for (const auto& d : defect) EXPECT_TRUE(d.is_zero_poly()) << name;
  }
}

TEST(FormalFlow, InitialConditionAndLinearFlow) {
  // Linear scalar x^2 y' = y: B = w * exp(z / (1 + x z)) to first orders.
  MPoly<ExactComplex> a(2);
  a.add_term({0, 1}, ExactComplex(1));
  OdeSystem<ExactComplex> sys(1, 1, {a});
  auto flow = formal_flow(sys, FlowOrders{4, 4, 2});
  const auto& b = flow.components[0];
  EXPECT_EQ(b.coeff({0, 0, 1}), ExactComplex(1));
  EXPECT_EQ(b.coeff({1, 0, 1}), ExactComplex(1));
  EXPECT_EQ(b.coeff({2, 0, 1}), ExactComplex(Rational(1, 2)));
  // z / (1 + x z) = z - x z^2 + ..., so the z^2 x coefficient is -1.
  EXPECT_EQ(b.coeff({2, 1, 1}), ExactComplex(-1));
  EXPECT_TRUE(is_zero(b.coeff({0, 0, 0})));
}

}  // namespace
}  // namespace stokeslab
