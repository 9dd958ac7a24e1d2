#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "khess/geometry.hpp"
#include "khess/stock_fields.hpp"

using namespace khess;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> sphere_point(int n, double R, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> p(2 * n);
  double s = 0.0;
  for (auto& x : p) {
    x = g(rng);
    s += x * x;
  }
  for (auto& x : p) x *= R / std::sqrt(s);
  return p;
}

}  // namespace

TEST(GaussLegendre, ExactForPolynomials) {
  const auto gl = gauss_legendre(5);
  double s8 = 0.0, s9 = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    s8 += gl.weights[i] * std::pow(gl.nodes[i], 8);
    s9 += gl.weights[i] * std::pow(gl.nodes[i], 9);
  }
  EXPECT_NEAR(s8, 2.0 / 9.0, 1e-14);
  EXPECT_NEAR(s9, 0.0, 1e-14);
}

TEST(Quadrature, ClosedForms) {
  EXPECT_NEAR(unit_sphere_area(2), 2.0 * pi * pi, 1e-12);
  EXPECT_NEAR(unit_ball_volume(2), pi * pi / 2.0, 1e-12);
  EXPECT_NEAR(unit_sphere_area(3), pi * pi * pi, 1e-12);
  EXPECT_NEAR(unit_ball_volume(3), pi * pi * pi / 6.0, 1e-12);
  // x_1^2 averages to 1/4 on S^3
  EXPECT_NEAR(sphere_moment({2, 0, 0, 0}), pi * pi / 2.0, 1e-12);
  // integral of x_1^2 over B^4 = (1/4) * 2 pi^2 / 6
  EXPECT_NEAR(ball_moment({2, 0, 0, 0}), pi * pi / 12.0, 1e-12);
  EXPECT_EQ(sphere_moment({1, 0, 0, 0}), 0.0);
}

TEST(Quadrature, DefaultRuleCalibrates) {
  const auto rule = build_ball_quadrature(2, 16, 4096, 42);
  EXPECT_EQ(rule.sphere_degree, 23);
  const auto c = calibrate(rule);
  EXPECT_TRUE(c.pass);
  EXPECT_LT(c.volume_rel, 1e-12);
  EXPECT_LT(c.area_rel, 1e-12);
  EXPECT_LT(c.moment_rel, 1e-12);
}

TEST(Quadrature, RadiusScaling) {
  const auto rule = build_ball_quadrature(2, 8, 500, 1, 2.0);
  EXPECT_NEAR(rule.interior.weights.sum(), pi * pi / 2.0 * 16.0, 1e-10);
  EXPECT_NEAR(rule.boundary.weights.sum(), 2.0 * pi * pi * 8.0, 1e-10);
}

TEST(Quadrature, CoarseRuleFailsCalibration) {
  const auto rule = build_ball_quadrature(3, 4, 100, 1);
  EXPECT_FALSE(calibrate(rule).pass);
}

TEST(Quadrature, InvalidArguments) {
  EXPECT_THROW(build_ball_quadrature(2, 2, 4096, 1), ValidationError);
  EXPECT_THROW(build_ball_quadrature(2, 16, 10, 1), ValidationError);
}

TEST(Sphere, LeviFormAndMeanCurvature) {
  std::mt19937_64 rng(1);
  for (int n : {2, 3}) {
    const auto spec = DomainSpec::ball(n, 1.0);
    for (int t = 0; t < 20; ++t) {
      const auto p = sphere_point(n, 1.0, rng);
      const auto b = boundary_point(spec, p);
      EXPECT_NEAR(b.shape.Hb, 2.0 * n - 2.0, 1e-9);
      EXPECT_NEAR((b.shape.L_H - CMat::Identity(n - 1, n - 1)).norm(), 0.0, 1e-9);
      EXPECT_NEAR(b.shape.L_ZT.norm(), 0.0, 1e-9);
      // frame is unitary with Z_n the normal direction
      CMat full(n, n);
      full << b.frame.Z, b.frame.Zn;
      EXPECT_NEAR((full.adjoint() * full - CMat::Identity(n, n)).norm(), 0.0, 1e-12);
    }
  }
}

TEST(Sphere, RadiusScalesCurvature) {
  std::mt19937_64 rng(2);
  const auto spec = DomainSpec::ball(2, 2.0);
  const auto b = boundary_point(spec, sphere_point(2, 2.0, rng));
  EXPECT_NEAR(b.shape.Hb, 1.0, 1e-9);
  EXPECT_NEAR(std::abs(b.shape.L_H(0, 0) - 0.5), 0.0, 1e-9);
}

TEST(Sphere, Abs2Trace) {
  std::mt19937_64 rng(3);
  for (int n : {2, 3}) {
    const auto spec = DomainSpec::ball(n, 1.0);
    const PolyField u = PolyField::abs2(n);
    const auto p = sphere_point(n, 1.0, rng);
    const auto b = boundary_point(spec, p);
    const FieldJet j = jet(u, p, true);
    // |z|^2 is constant on the sphere
    EXPECT_NEAR(boundary_hessian(j, b.frame, b.shape).matrix().norm(), 0.0, 1e-12);
    EXPECT_NEAR(sublaplacian_of_trace(j, b.frame, b.shape), 0.0, 1e-12);
    EXPECT_NEAR(normal_derivative(j, b.frame), 2.0, 1e-12);
    EXPECT_NEAR(T_derivative(j, b.frame), 0.0, 1e-12);
    const auto tnn = tnn_cross_check(j, b.frame, b.shape);
    EXPECT_NEAR(tnn.lhs, 2.0 * (n - 1), 1e-12);
    EXPECT_NEAR(tnn.rhs, 2.0 * (n - 1), 1e-12);
  }
}

TEST(Sphere, NormalEntryAndLaplacianRelationOnStockFields) {
  std::mt19937_64 rng(4);
  for (int n : {2, 3}) {
    const auto spec = DomainSpec::ball(n, 1.0);
    for (const auto& name : stock_library_names()) {
      const PolyField u = stock_field(name, n);
      for (int t = 0; t < 5; ++t) {
        const auto p = sphere_point(n, 1.0, rng);
        const auto b = boundary_point(spec, p);
        const FieldJet j = jet(u, p, true);
        const auto tnn = tnn_cross_check(j, b.frame, b.shape);
        EXPECT_NEAR(tnn.lhs, tnn.rhs, 1e-9 * (1.0 + std::abs(tnn.lhs))) << name;
        EXPECT_LT(laplacian_relation_residual(j, b.frame, b.shape), 1e-9 * (1.0 + std::abs(tnn.lhs))) << name;
      }
    }
  }
}

TEST(LevelSet, EllipsoidLaplacianRelation) {
  const int n = 2;
  const double a = 1.0, c = 2.0;
  const PolyField x1 = PolyField::x(n, 0), y1 = PolyField::y(n, 0);
  const PolyField x2 = PolyField::x(n, 1), y2 = PolyField::y(n, 1);
  const PolyField rho = (1.0 / (a * a)) * (x1 * x1 + y1 * y1) + (1.0 / (c * c)) * (x2 * x2) + y2 * y2 -
                        PolyField::constant(n, 1.0);
  const auto spec = DomainSpec::level_set(rho);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  const PolyField u = stock_field("random:11", n);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> p(4);
    for (auto& x : p) x = g(rng);
    const double s = std::sqrt(rho.eval_real(p) + 1.0);
    for (auto& x : p) x /= s;
    ASSERT_NEAR(rho.eval_real(p), 0.0, 1e-12);
    const auto b = boundary_point(spec, p);
    const FieldJet j = jet(u, p, true);
    const double scale = 1.0 + j.real_hessian.norm() + j.real_gradient.norm();
    EXPECT_LT(laplacian_relation_residual(j, b.frame, b.shape), 1e-9 * scale);
  }
}

TEST(LevelSet, RejectsComplexDefiningFunction) {
  EXPECT_THROW(DomainSpec::level_set(PolyField::z(2, 0)), ValidationError);
}

TEST(Divergence, ConstantTimesX1Squared) {
  // conj(Z_1) (sqrt 2 d/dzbar_1 x_1^2) = 1, so the ball integral is the volume
  const int n = 2;
  const auto spec = DomainSpec::ball(n, 1.0);
  const auto rule = build_ball_quadrature(n, 8, 1000, 3);
  const PolyField x1 = PolyField::x(n, 0);
  const auto r = verify_divergence_identity(spec, rule, PolyField::constant(n, 1.0), x1 * x1,
                                            PolyField::abs2(n), 0);
  EXPECT_NEAR(r.lhs.real(), pi * pi / 2.0, 1e-10);
  EXPECT_LT(r.residual, 1e-10);
}

TEST(Divergence, NewtonTensorFields) {
  for (int n : {2, 3}) {
    const auto spec = DomainSpec::ball(n, 1.0);
    const auto rule = build_ball_quadrature(n, 12, 3000, 3);
    const PolyField x1 = PolyField::x(n, 0);
    for (int k = 1; k < n; ++k) {
      const auto r = verify_divergence_identity(spec, rule, x1, x1 * PolyField::abs2(n), stock_field("abs4", n), k);
      EXPECT_GT(std::abs(r.lhs), 1.0) << "n=" << n << " k=" << k;
      EXPECT_LT(r.residual, 5e-3 * r.scale) << "n=" << n << " k=" << k;
    }
  }
}
