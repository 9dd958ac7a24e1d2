#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "khess/varcheck.hpp"

using namespace khess;

namespace {

constexpr double pi = std::numbers::pi;

const Discretization& disc2() {
  static const Discretization d = Discretization::make(build_ball_quadrature(2, 12, 2000, 42));
  return d;
}

}  // namespace

TEST(HarmonicExtension, X1Squared) {
  // x_1^2 - (|x|^2 - 1) / 4 in R^4
  const int n = 2;
  const PolyField x1 = PolyField::x(n, 0);
  const PolyField h = harmonic_extension_ball(x1 * x1, 1.0);
  const PolyField expect = x1 * x1 - 0.25 * (PolyField::abs2(n) - PolyField::constant(n, 1.0));
  EXPECT_LT((h - expect).max_coeff(), 1e-14);
  EXPECT_TRUE(h.laplacian().is_zero());
}

TEST(HarmonicExtension, QuarticDataKeepsTrace) {
  const int n = 2;
  const PolyField f = stock_field("random:7", n).real_part();
  const double R = 1.5;
  const PolyField h = harmonic_extension_ball(f, R);
  EXPECT_LT(h.laplacian().max_coeff(), 1e-10);
  const std::vector<double> p{R * 0.6, R * 0.0, R * 0.0, R * 0.8};
  EXPECT_NEAR(h.eval_real(p), f.eval_real(p), 1e-10);
}

TEST(Perturbation, DirectionVanishesOnSphere) {
  const auto fam = PerturbationFamily::make(PolyField::abs2(2), PolyField::x(2, 0), 1.0);
  const std::vector<double> p{0.6, 0.0, 0.0, 0.8};
  EXPECT_NEAR(fam.direction.eval_real(p), 0.0, 1e-14);
}

TEST(Variation, FirstVariationClosedForm) {
  // d/dt E_2(|z|^2 + t (1 - |z|^2)) = 2 * (-2 pi^2 / 3)
  const auto& d = disc2();
  const auto fam = PerturbationFamily::make(PolyField::abs2(2), PolyField::constant(2, 1.0), 1.0);
  const auto r = first_variation_check(fam, 1, d);
  ASSERT_TRUE(r.analytic.has_value());
  EXPECT_NEAR(*r.analytic, -4.0 * pi * pi / 3.0, 1e-10);
  EXPECT_TRUE(r.verdict);
  EXPECT_LT(r.residuals[0], 1e-8);
}

TEST(Variation, SecondVariationK1IsDirichletForm) {
  // E_2 is quadratic in t; for real v the second variation is int |grad v|^2
  const auto& d = disc2();
  const auto fam = PerturbationFamily::make(PolyField::abs2(2), PolyField::x(2, 0), 1.0);
  const auto r = second_variation_check(fam, 1, d);
  EXPECT_TRUE(r.verdict);
  ASSERT_TRUE(r.analytic.has_value());
  // -int v Lap v with Lap v = -12 x_1: 12 (pi^2/12 - pi^2/16)
  EXPECT_NEAR(*r.analytic, pi * pi / 4.0, 1e-9);
}

TEST(Variation, HigherDerivativesK2) {
  const auto& d = disc2();
  const auto fam = PerturbationFamily::make(PolyField::abs2(2) * PolyField::abs2(2), PolyField::x(2, 0), 1.0);
  for (int j = 1; j <= 3; ++j) {
    const auto r = higher_derivative_check(fam, 2, j, d);
    EXPECT_TRUE(r.verdict) << "j=" << j << " residual=" << r.residuals[0];
  }
  EXPECT_THROW(higher_derivative_check(fam, 2, 4, d), std::out_of_range);
}

TEST(Variation, ObservedOrderTwo) {
  const auto& d = disc2();
  const auto fam = PerturbationFamily::make(PolyField::abs2(2), PolyField::constant(2, 1.0), 1.0);
  const auto r = first_variation_check(fam, 2, d);
  EXPECT_EQ(r.regime, "asymptotic");
  ASSERT_TRUE(r.observed_order.has_value());
  EXPECT_NEAR(*r.observed_order, 2.0, 0.05);
}

TEST(Convexity, SegmentInCone) {
  const auto& d = disc2();
  const PolyField u0 = stock_field("re:2", 2);
  const PolyField u1 = u0 - 1.0 * ball_bump(2, 1.0);
  for (int k : {1, 2}) EXPECT_TRUE(convexity_scan(u0, u1, k, d, 10).verdict);
}

TEST(Dirichlet, PluriharmonicFamilyMargins) {
  const auto& d = disc2();
  const PolyField u_f = stock_field("re:2", 2);
  PerturbationFamily fam{u_f, -1.0 * ball_bump(2, 1.0), {0.0, 0.1, 0.5, 1.0}};
  for (int k : {1, 2}) {
    const auto r = dirichlet_principle_experiment(u_f, {fam}, k, d);
    EXPECT_TRUE(r.verdict);
    EXPECT_EQ(r.residuals.front(), 0.0);  // eps = 0 competitor
    for (std::size_t i = 1; i < r.residuals.size(); ++i) EXPECT_GE(r.residuals[i], r.residuals[i - 1]);
  }
}

TEST(Dirichlet, NonSolutionIsFlagged) {
  const auto& d = disc2();
  PerturbationFamily fam{PolyField::abs2(2), ball_bump(2, 1.0), {0.1}};
  EXPECT_FALSE(dirichlet_principle_experiment(PolyField::abs2(2), {fam}, 1, d).verdict);
}

namespace {

std::vector<PolyField> bump_basis(int n) {
  const PolyField b = ball_bump(n, 1.0);
  std::vector<PolyField> basis{b};
  for (int v = 0; v < 2 * n; ++v) basis.push_back(b * PolyField::coord(n, v));
  return basis;
}

}  // namespace

TEST(Minimizer, InfeasibleStartThrows) {
  const auto& d = disc2();
  const PolyField x1 = PolyField::x(2, 0);
  const PolyField u_f = harmonic_extension_ball(x1 * x1, 1.0);
  EXPECT_THROW(minimize_over_basis(u_f, bump_basis(2), 1, d, std::vector<double>(5, 0.3)), InfeasibleError);
}

TEST(Minimizer, ConvergesBackToSolution) {
  const auto& d = disc2();
  const PolyField x1 = PolyField::x(2, 0);
  const PolyField u_f = harmonic_extension_ball(x1 * x1, 1.0);
  const auto m = minimize_over_basis(u_f, bump_basis(2), 1, d, {-0.3, 0.05, 0.05, 0.05, 0.05});
  EXPECT_TRUE(m.report.verdict);
  double cn = 0.0;
  for (double c : m.c) cn += c * c;
  EXPECT_LT(std::sqrt(cn), 1e-2);
  EXPECT_NEAR(m.energy, m.energy_f, 5e-3 * m.report.scale);
}

TEST(Minimizer, TrivialCases) {
  const auto& d = disc2();
  const PolyField x1 = PolyField::x(2, 0);
  const PolyField u_f = harmonic_extension_ball(x1 * x1, 1.0);
  const auto empty = minimize_over_basis(u_f, {}, 1, d, {});
  EXPECT_EQ(empty.iterations, 0);
  EXPECT_DOUBLE_EQ(empty.energy, empty.energy_f);
  const auto zero = minimize_over_basis(u_f, bump_basis(2), 1, d, std::vector<double>(5, 0.0));
  EXPECT_EQ(zero.iterations, 0);
  EXPECT_THROW(minimize_over_basis(u_f, {PolyField::x(2, 0)}, 1, d, {0.0}), ValidationError);
}
