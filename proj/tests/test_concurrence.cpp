// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "support.hpp"

using namespace purikit;
using namespace testing_support;

TEST(Concurrence, BellStatesAreMaximal) {
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(concurrence(DensityMatrix::bell(k)), 1.0, 1e-12);
}

TEST(Concurrence, SeparableStatesVanish) {
  EXPECT_EQ(concurrence(DensityMatrix::maximally_mixed()), 0.0);
  Gen g(31);
  for (int t = 0; t < 200; ++t) {
    const Mat2 a = random_density<2>(g), b = random_density<2>(g);
    EXPECT_NEAR(concurrence(kron(a, b)), 0.0, 1e-7);
  }
}

TEST(Concurrence, WernerQuarterMixture) {
  const double q = 0.25 / 3.0;
  const auto rho = bell_to_computational(bell_table(0.75, q, q, q));
  EXPECT_NEAR(concurrence(rho), 0.5, 1e-12);
}

TEST(Concurrence, PureStateClosedForm) {
  Gen g(32);
  for (int t = 0; t < 200; ++t) {
    Vec4 psi;
    for (int i = 0; i < 4; ++i) psi(i) = g.cnormal();
    psi.normalize();
    // C = 2 |ad - bc| for a|00> + b|01> + c|10> + d|11>.
    const double want = 2.0 * std::abs(psi(0) * psi(3) - psi(1) * psi(2));
    EXPECT_NEAR(concurrence(Mat4(psi * psi.adjoint())), want, 1e-7);
  }
}

TEST(Concurrence, AgreesWithGeneralEigenvaluePath) {
  Gen g(33);
  for (int t = 0; t < 2000; ++t) {
    // Mix toward Bell states so both entangled and separable inputs appear.
    const Mat4 rho = 0.5 * random_density<4>(g) + 0.5 * bell_projector(1 + t % 4) * g.uniform();
    const Mat4 r = rho / rho.trace();
    EXPECT_NEAR(concurrence(r), reference_concurrence(r), 1e-9);
  }
}

TEST(Concurrence, BellDiagonalClosedForm) {
  Gen g(34);
  for (int t = 0; t < 1000; ++t) {
    std::array<double, 4> r;
    double s = 0.0;
    for (double& x : r) s += (x = -std::log(g.uniform(1e-12, 1.0)));
    for (double& x : r) x /= s;
    const double want = std::max(0.0, 2.0 * *std::max_element(r.begin(), r.end()) - 1.0);
    EXPECT_NEAR(concurrence(from_bell(bell_table(r[0], r[1], r[2], r[3]))), want, 1e-9);
  }
}

TEST(Concurrence, LocalUnitaryInvariance) {
  Gen g(35);
  for (int t = 0; t < 500; ++t) {
    const Mat4 rho = random_density<4>(g) * 0.4 + bell_projector(2) * 0.6;
    const Mat4 u = kron(random_unitary2(g), random_unitary2(g));
    EXPECT_NEAR(concurrence(rho), concurrence(Mat4(u * rho * u.adjoint())), 1e-9);
  }
}

TEST(Concurrence, RejectsStronglyNegativeSpectrum) {
  Mat4 bad = Mat4::Zero();
  bad(0, 0) = 1.2;
  bad(3, 3) = -0.2;
  bad(0, 3) = bad(3, 0) = 0.3;
  EXPECT_THROW(concurrence(bad), NumericalError);
}

TEST(ConcurrenceGradient, MatchesDirectionalDifferences) {
  Gen g(36);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    const Mat4 rho = random_density<4>(g) * 0.5 + bell_projector(1 + t % 4) * 0.5;
    const auto cg = concurrence_with_gradient(rho);
    if (cg.value < 1e-3) continue;
    Mat4 dir = random_hermitian<4>(g);
    dir -= dir.trace() / 4.0 * Mat4::Identity();
    const double h = 1e-6;
    const double fd = (concurrence(Mat4(rho + h * dir)) - concurrence(Mat4(rho - h * dir))) / (2 * h);
    const double an = (cg.grad * dir).trace().real();
    EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)));
    EXPECT_NEAR(cg.value, concurrence(rho), 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(ConcurrenceGradient, ZeroOnSeparable) {
  const auto cg = concurrence_with_gradient(Mat4::Identity() * 0.25);
  EXPECT_EQ(cg.value, 0.0);
  EXPECT_EQ(max_abs(cg.grad), 0.0);
}
