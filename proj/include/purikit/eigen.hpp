// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

#include "purikit/linalg.hpp"

namespace purikit {

template <int N>
struct HermitianEigen {
  Eigen::Matrix<double, N, 1> values;    // descending
  Eigen::Matrix<cplx, N, N> vectors;     // column i belongs to values(i)
};

namespace detail {

template <int N>
double off_diagonal_norm2(const Eigen::Matrix<cplx, N, N>& a) {
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) s += std::norm(a(i, j));
  return s;
}

}  // namespace detail

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Only the Hermitian
/// part of the input is used; no validation is done here.
template <int N>
HermitianEigen<N> jacobi_eigen(const Eigen::Matrix<cplx, N, N>& input,
                               bool want_vectors = true) {
  using Mat = Eigen::Matrix<cplx, N, N>;
  Mat a = (input + input.adjoint()) * 0.5;
  Mat v = Mat::Identity();

  const double scale = a.squaredNorm();
  const double stop = scale * 1e-32;

  for (int sweep = 0; sweep < 64; ++sweep) {
    if (detail::off_diagonal_norm2<N>(a) <= stop) break;
    for (int p = 0; p < N - 1; ++p) {
      for (int q = p + 1; q < N; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0 || r * r <= stop * 1e-4) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const cplx phase = a(p, q) / r;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = U R U^dagger with U = diag(1, e^{-i phi}) in the (p, q) plane.
        const cplx jpp = c;
        const cplx jpq = s * phase;
        const cplx jqp = -s * std::conj(phase);
        const cplx jqq = c;

        for (int k = 0; k < N; ++k) {  // a <- a J
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        for (int k = 0; k < N; ++k) {  // a <- J^dagger a
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();

        if (want_vectors) {
          for (int k = 0; k < N; ++k) {
            const cplx vkp = v(k, p);
            const cplx vkq = v(k, q);
            v(k, p) = vkp * jpp + vkq * jqp;
            v(k, q) = vkp * jpq + vkq * jqq;
          }
        }
      }
    }
  }

  std::array<int, N> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return a(i, i).real() > a(j, j).real();
  });

  HermitianEigen<N> out;
  for (int i = 0; i < N; ++i) {
    out.values(i) = a(order[i], order[i]).real();
    if (want_vectors) out.vectors.col(i) = v.col(order[i]);
  }
  if (!want_vectors) out.vectors.setZero();
  return out;
}

/// Eigenvalues (descending) of a Hermitian 4x4 or 16x16 matrix.
/// Throws std::invalid_argument when the input is not Hermitian.
template <int N>
Eigen::Matrix<double, N, 1> hermitian_eigenvalues(
    const Eigen::Matrix<cplx, N, N>& m, double tol = kStateTol) {
  if (!is_hermitian(m, tol))
    throw std::invalid_argument("hermitian_eigenvalues: matrix is not Hermitian");
  return jacobi_eigen<N>(m, false).values;
}

/// Coefficients c0..c3 of det(x I - A) = x^4 + c3 x^3 + c2 x^2 + c1 x + c0
/// (Faddeev-LeVerrier).
inline std::array<cplx, 4> characteristic_polynomial(const Mat4& a) {
  std::array<cplx, 4> c{};
  Mat4 m = Mat4::Zero();
  cplx prev = 1.0;  // c_{n-k+1}
  for (int k = 1; k <= 4; ++k) {
    m = a * m + prev * Mat4::Identity();
    const cplx ck = -(a * m).trace() / static_cast<double>(k);
    c[4 - k] = ck;
    prev = ck;
  }
  return c;
}

namespace detail {

inline cplx poly4(const std::array<cplx, 4>& c, cplx x) {
  return (((x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
}
inline cplx dpoly4(const std::array<cplx, 4>& c, cplx x) {
  return ((4.0 * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
}

inline cplx principal_cbrt(cplx z) {
  if (z == cplx{0.0, 0.0}) return 0.0;
  return std::polar(std::cbrt(std::abs(z)), std::arg(z) / 3.0);
}

/// Roots of x^3 + b x^2 + c x + d (Cardano, complex arithmetic).
inline std::array<cplx, 3> cubic_roots(cplx b, cplx c, cplx d) {
  const cplx p = c - b * b / 3.0;
  const cplx q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const cplx disc = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
  cplx u = principal_cbrt(-q / 2.0 + disc);
  if (std::abs(u) < 1e-300) u = principal_cbrt(-q / 2.0 - disc);
  const cplx omega{-0.5, std::sqrt(3.0) / 2.0};
  std::array<cplx, 3> t{};
  if (std::abs(u) < 1e-300) {
    t = {0.0, 0.0, 0.0};
  } else {
    cplx uk = u;
    for (int k = 0; k < 3; ++k) {
      t[k] = uk - p / (3.0 * uk);
      uk *= omega;
    }
  }
  for (auto& r : t) r -= b / 3.0;
  return t;
}

inline std::array<cplx, 2> quadratic_roots(cplx b, cplx c) {
  const cplx disc = std::sqrt(b * b - 4.0 * c);
  // Avoid cancellation by picking the larger-magnitude root first.
  const cplx q = (std::real(std::conj(b) * disc) >= 0.0) ? -0.5 * (b + disc)
                                                        : -0.5 * (b - disc);
  if (std::abs(q) == 0.0) return {0.0, 0.0};
  return {q, c / q};
}

}  // namespace detail

/// Roots of the monic quartic x^4 + c3 x^3 + c2 x^2 + c1 x + c0 via Ferrari's
/// resolvent cubic, followed by Newton polishing.
inline std::array<cplx, 4> quartic_roots(const std::array<cplx, 4>& c) {
  const cplx a3 = c[3];
  const cplx shift = a3 / 4.0;
  // Depressed quartic y^4 + p y^2 + q y + r with x = y - shift.
  const cplx p = c[2] - 3.0 * a3 * a3 / 8.0;
  const cplx q = c[1] - a3 * c[2] / 2.0 + a3 * a3 * a3 / 8.0;
  const cplx r = c[0] - a3 * c[1] / 4.0 + a3 * a3 * c[2] / 16.0 -
                 3.0 * a3 * a3 * a3 * a3 / 256.0;

  std::array<cplx, 4> y{};
  const double size = std::max({std::abs(p), std::sqrt(std::abs(q)),
                                std::sqrt(std::sqrt(std::abs(r))), 1e-300});
  // Resolvent 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0.
  const auto ms = detail::cubic_roots(p, (p * p - 4.0 * r) / 4.0, -q * q / 8.0);
  cplx m = ms[0];
  for (const auto& cand : ms)
    if (std::abs(cand) > std::abs(m)) m = cand;

  if (std::abs(m) <= 1e-14 * size * size) {
    // Biquadratic: y^4 + p y^2 + r.
    const auto z = detail::quadratic_roots(p, r);
    y = {std::sqrt(z[0]), -std::sqrt(z[0]), std::sqrt(z[1]), -std::sqrt(z[1])};
  } else {
    const cplx s = std::sqrt(2.0 * m);
    const auto lo = detail::quadratic_roots(-s, p / 2.0 + m + q / (2.0 * s));
    const auto hi = detail::quadratic_roots(s, p / 2.0 + m - q / (2.0 * s));
    y = {lo[0], lo[1], hi[0], hi[1]};
  }

  std::array<cplx, 4> roots{};
  for (int i = 0; i < 4; ++i) {
    cplx x = y[i] - shift;
    for (int it = 0; it < 8; ++it) {
      const cplx f = detail::poly4(c, x);
      const cplx df = detail::dpoly4(c, x);
      if (std::abs(df) == 0.0) break;
      const cplx nx = x - f / df;
      if (!(std::abs(detail::poly4(c, nx)) < std::abs(f))) break;
      x = nx;
    }
    roots[i] = x;
  }
  return roots;
}

/// The four eigenvalues of a general complex 4x4 matrix, ordered by
/// descending real part.
inline std::array<cplx, 4> general_eigenvalues_4x4(const Mat4& m) {
  auto roots = quartic_roots(characteristic_polynomial(m));
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return roots;
}

}  // namespace purikit
