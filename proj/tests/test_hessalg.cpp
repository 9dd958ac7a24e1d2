#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "khess/hessalg.hpp"

using namespace khess;

namespace {

const cplx I(0.0, 1.0);

HermitianMatrix random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return HermitianMatrix::symmetrize(m);
}

}  // namespace

TEST(ElementarySymmetric, SmallCases) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(elementary_symmetric(v, 0), 1.0);
  EXPECT_DOUBLE_EQ(elementary_symmetric(v, 1), 10.0);
  EXPECT_DOUBLE_EQ(elementary_symmetric(v, 2), 35.0);
  EXPECT_DOUBLE_EQ(elementary_symmetric(v, 3), 50.0);
  EXPECT_DOUBLE_EQ(elementary_symmetric(v, 4), 24.0);
  EXPECT_DOUBLE_EQ(elementary_symmetric(v, 5), 0.0);
}

TEST(SigmaK, DiagonalAndOffDiagonal) {
  const auto d = HermitianMatrix::diagonal({1.0, 2.0, 3.0});
  EXPECT_NEAR(sigma_k(d, 1), 6.0, 1e-12);
  EXPECT_NEAR(sigma_k(d, 2), 11.0, 1e-12);
  EXPECT_NEAR(sigma_k(d, 3), 6.0, 1e-12);
  EXPECT_EQ(sigma_k(d, 4), 0.0);
  EXPECT_EQ(sigma_k(d, 0), 1.0);

  CMat m(2, 2);
  m << 2.0, I, -I, 2.0;
  const auto a = HermitianMatrix::from_raw(m);
  EXPECT_NEAR(sigma_k(a, 2), 3.0, 1e-12);  // det = 4 - |i|^2
  EXPECT_NEAR(sigma_k(a, 1), 4.0, 1e-12);
}

TEST(SigmaK, NegativeOrderThrows) {
  EXPECT_THROW(sigma_k(HermitianMatrix::identity(2), -1), std::out_of_range);
}

TEST(HermitianMatrix, RejectsNonHermitian) {
  CMat m(2, 2);
  m << 1.0, 2.0, 3.0, 1.0;
  EXPECT_THROW(HermitianMatrix::from_raw(m), ValidationError);
}

TEST(NewtonTensor, TwoByTwo) {
  const auto t = newton_tensor(HermitianMatrix::diagonal({1.0, 2.0}), 1);
  EXPECT_NEAR(std::abs(t.matrix()(0, 0) - 2.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(t.matrix()(1, 1) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(t.matrix()(0, 1)), 0.0, 1e-12);
  EXPECT_THROW(newton_tensor(HermitianMatrix::identity(2), 2), std::out_of_range);
}

TEST(NewtonTensor, OffDiagonalEntry) {
  // T_1(A) = sigma_1 I - A
  CMat m(2, 2);
  m << 1.0, 2.0 + I, 2.0 - I, -3.0;
  const auto t = newton_tensor(HermitianMatrix::from_raw(m), 1);
  EXPECT_NEAR(std::abs(t.matrix()(0, 0) - (-3.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(t.matrix()(0, 1) + (2.0 + I)), 0.0, 1e-12);
}

TEST(NewtonTensor, TraceAndContraction) {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 6; ++n)
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = random_hermitian(n, rng);
      for (int k = 0; k < n; ++k) {
        const auto t = newton_tensor(a, k);
        const double s = sigma_k(a, k);
        EXPECT_NEAR(t.matrix().trace().real(), (n - k) * s, 1e-10 * (1.0 + std::abs(s)));
        // (1/(k+1)) A : T_k = sigma_{k+1}
        const double c = (a.matrix() * t.matrix()).trace().real() / (k + 1);
        const double s1 = sigma_k(a, k + 1);
        EXPECT_NEAR(c, s1, 1e-10 * (1.0 + std::abs(s1)));
      }
    }
}

TEST(Polarization, DiagonalAndValues) {
  const auto i3 = HermitianMatrix::identity(3);
  EXPECT_NEAR(sigma_k_polarized({i3, i3}), 3.0, 1e-12);
  EXPECT_NEAR(sigma_k_polarized({}), 1.0, 0.0);
  const auto a = HermitianMatrix::diagonal({1.0, 0.0});
  const auto b = HermitianMatrix::diagonal({0.0, 1.0});
  EXPECT_NEAR(sigma_k_polarized({a, b}), 0.5, 1e-12);
  EXPECT_EQ(sigma_k_polarized({a, a, b}), 0.0);  // order above dimension

  const auto tp = newton_tensor_polarized({i3, i3});
  EXPECT_NEAR((tp.matrix() - CMat::Identity(3, 3)).norm(), 0.0, 1e-12);

  std::mt19937_64 rng(9);
  const auto r = random_hermitian(4, rng);
  EXPECT_NEAR(sigma_k_polarized({r, r, r}), sigma_k(r, 3), 1e-10 * (1.0 + std::abs(sigma_k(r, 3))));
}

TEST(DeltaOracle, AgreesWithEigenvaluePath) {
  std::mt19937_64 rng(11);
  for (int n = 2; n <= 4; ++n) {
    std::vector<HermitianMatrix> as;
    for (int k = 0; k < n; ++k) as.push_back(random_hermitian(n, rng));
    EXPECT_NEAR(oracle::sigma_k_delta(as), sigma_k_polarized(as), 1e-10 * (1.0 + std::abs(sigma_k_polarized(as))));
    std::vector<HermitianMatrix> lower(as.begin(), as.end() - 1);
    const CMat d = oracle::newton_tensor_delta(lower, n);
    EXPECT_NEAR((d - newton_tensor_polarized(lower, n).matrix()).norm(), 0.0, 1e-10 * (1.0 + d.norm()));
  }
  const auto a = HermitianMatrix::diagonal({1.0, 0.0});
  const auto b = HermitianMatrix::diagonal({0.0, 1.0});
  EXPECT_NEAR(oracle::sigma_k_delta({a, b}), 0.5, 1e-14);
}

TEST(DeltaOracle, DimensionLimit) {
  const auto a = HermitianMatrix::identity(5);
  EXPECT_THROW(oracle::sigma_k_delta({a}), OracleLimitError);
}

TEST(Cone, MembershipAndMargin) {
  const auto a = HermitianMatrix::diagonal({1.0, 1.0, -0.5});
  const auto r1 = cone_membership(a, 1);
  EXPECT_TRUE(r1.in_cone);
  // sigma_2 = 1 - 0.5 - 0.5 = 0 sits on the boundary of the open cone
  EXPECT_FALSE(cone_membership(a, 2).in_cone);
  EXPECT_NEAR(cone_closure_margin(a.matrix(), 2), 0.0, 1e-12);
  EXPECT_LT(cone_closure_margin(a.matrix(), 3), 0.0);
  EXPECT_TRUE(cone_membership(HermitianMatrix::identity(3), 3).in_cone);
}

TEST(Linearization, FiniteDifferenceMatchesNewtonTensor) {
  std::mt19937_64 rng(3);
  const auto a = random_hermitian(4, rng);
  for (int k = 0; k < 4; ++k) EXPECT_LT(linearization_residual(a, k, 1e-5), 1e-6);
}
