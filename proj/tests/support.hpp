// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <random>

#include "purikit/purikit.hpp"

namespace testing_support {

using namespace purikit;

/// Test-side generator, independent of the library's Rng.
class Gen {
 public:
  explicit Gen(unsigned seed) : eng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  cplx cnormal() { return {normal(), normal()}; }
  std::mt19937& engine() { return eng_; }

 private:
  std::mt19937 eng_;
};

template <int N>
Eigen::Matrix<cplx, N, N> random_matrix(Gen& g) {
  Eigen::Matrix<cplx, N, N> m;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) m(i, j) = g.cnormal();
  return m;
}

template <int N>
Eigen::Matrix<cplx, N, N> random_hermitian(Gen& g) {
  const auto m = random_matrix<N>(g);
  return (m + m.adjoint()) * 0.5;
}

/// Full-rank random density matrix G G^dag / Tr.
template <int N>
Eigen::Matrix<cplx, N, N> random_density(Gen& g) {
  const auto m = random_matrix<N>(g);
  Eigen::Matrix<cplx, N, N> rho = m * m.adjoint();
  return rho / rho.trace();
}

inline DensityMatrix random_state(Gen& g) { return DensityMatrix::checked(random_density<4>(g)); }

/// Haar-ish single-qubit unitary from QR of a complex Gaussian matrix.
inline Mat2 random_unitary2(Gen& g) {
  const Mat2 m = random_matrix<2>(g);
  Eigen::HouseholderQR<Mat2> qr(m);
  return qr.householderQ();
}

inline Mat4 random_unitary4(Gen& g) {
  const Mat4 m = random_matrix<4>(g);
  Eigen::HouseholderQR<Mat4> qr(m);
  return qr.householderQ();
}

/// Wootters concurrence through the general eigenvalues of rho rho~
/// (Eigen's complex Schur solver).
inline double reference_concurrence(const Mat4& rho) {
  const Mat4 yy = kron(pauli::y(), pauli::y());
  const Mat4 tilde = yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Mat4> es(rho * tilde);
  std::array<double, 4> l;
  for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(es.eigenvalues()(i).real(), 0.0));
  std::sort(l.begin(), l.end(), std::greater<>());
  return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

/// Bell-diagonal state r with optional coherences r14 / r23 (others zero).
inline Mat4 bell_table(double r1, double r2, double r3, double r4) {
  Mat4 r = Mat4::Zero();
  r(0, 0) = r1;
  r(1, 1) = r2;
  r(2, 2) = r3;
  r(3, 3) = r4;
  return r;
}

}  // namespace testing_support

namespace testing_support {

/// Worst relative disagreement between the analytic gradient and central
/// differences (step h) with the outcome selection frozen at `angles`.
inline double gradient_relative_error(const EulerAngles& angles, const std::vector<Mat4>& sample,
                                      const MeasurementPolicy& policy, double h = 1e-5) {
  VariationalObjective obj(sample, policy);
  obj.select(angles);
  std::array<double, 30> g{};
  obj.evaluate(angles, &g);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 30; ++i) {
    EulerAngles p = angles, m = angles;
    p.alpha[i] += h;
    m.alpha[i] -= h;
    const double fd = (obj.evaluate(p) - obj.evaluate(m)) / (2.0 * h);
    num = std::max(num, std::abs(fd - g[i]));
    den = std::max(den, std::abs(fd));
  }
  return num / std::max(den, 1e-8);
}

/// Angles strictly inside the box, at least `margin` from every bound.
inline EulerAngles interior_angles(Gen& g, double margin = 1e-3) {
  EulerAngles e;
  for (int i = 0; i < 30; ++i) e.alpha[i] = g.uniform(margin, EulerAngles::upper(i) - margin);
  return e;
}

}  // namespace testing_support
