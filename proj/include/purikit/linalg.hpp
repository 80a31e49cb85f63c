// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace purikit {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Mat16 = Eigen::Matrix<cplx, 16, 16>;
using Vec4 = Eigen::Vector4cd;

inline constexpr cplx kI{0.0, 1.0};

/// Tolerance for Hermiticity, unit trace and positivity of states.
inline constexpr double kStateTol = 1e-10;
/// Probabilities / normalizations below this are treated as zero.
inline constexpr double kDegenerateFloor = 1e-14;

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A>& a,
                    const Eigen::MatrixBase<B>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol) {
  return m.rows() == m.cols() && max_abs_diff(m, m.adjoint()) <= tol;
}

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  Plain h = (m + m.adjoint()) * 0.5;
  return h;
}

/// Kronecker product of two 4x4 operators, first factor on the high
/// (most significant) index.
inline Mat16 kron(const Mat4& a, const Mat4& b) {
  Mat16 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
  return out;
}

inline Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

namespace pauli {
inline Mat2 identity() { return Mat2::Identity(); }
inline Mat2 x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}
inline Mat2 y() {
  Mat2 m;
  m << 0, -kI, kI, 0;
  return m;
}
inline Mat2 z() {
  Mat2 m;
  m << 1, 0, 0, -1;
  return m;
}
/// sigma_y (x) sigma_y; real and symmetric.
inline const Mat4& yy() {
  static const Mat4 m = kron(y(), y());
  return m;
}
}  // namespace pauli

}  // namespace purikit
