// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "purikit/eigen.hpp"
#include "purikit/errors.hpp"
#include "purikit/linalg.hpp"
#include "purikit/quantum.hpp"

namespace purikit {

/// Eigenvalues of rho~ = rho (Y) rho* (Y) below this are a numerical failure;
/// between it and zero they are clamped.
inline constexpr double kSpinFlipNegativeTol = 1e-9;

/// Spin-flipped state (sigma_y x sigma_y) rho* (sigma_y x sigma_y), conjugation
/// in the computational basis.
inline Mat4 spin_flip(const Mat4& rho) {
  const Mat4& y = pauli::yy();
  return y * rho.conjugate() * y;
}

/// rho~ = rho * spin_flip(rho); non-Hermitian.
inline Mat4 spin_flip_product(const Mat4& rho) { return rho * spin_flip(rho); }

struct WoottersSpectrum {
  std::array<double, 4> lambda{};  // square roots of eig(rho~), descending
  double concurrence = 0.0;
};

namespace detail {

// With rho = W W^dagger, eig(rho~) = eig(W^dagger rho_f W), a Hermitian PSD
// matrix; right eigenvectors of rho~ are W v.
struct SpinFlipFactor {
  Mat4 w;                 // rho = w w^dagger
  Mat4 flipped;           // spin_flip(rho)
  HermitianEigen<4> h;    // eigen-decomposition of w^dagger flipped w
};

inline SpinFlipFactor spin_flip_factor(const Mat4& rho, bool want_vectors) {
  SpinFlipFactor f;
  const auto e = jacobi_eigen<4>(rho, true);
  Eigen::Vector4d root;
  for (int i = 0; i < 4; ++i) root(i) = std::sqrt(std::max(e.values(i), 0.0));
  f.w = e.vectors * root.asDiagonal();
  f.flipped = spin_flip(rho);
  const Mat4 h = f.w.adjoint() * f.flipped * f.w;
  f.h = jacobi_eigen<4>(h, want_vectors);
  return f;
}

inline std::array<double, 4> clamp_roots(const Eigen::Vector4d& mu) {
  std::array<double, 4> lambda{};
  for (int i = 0; i < 4; ++i) {
    if (mu(i) < -kSpinFlipNegativeTol)
      throw NumericalError("concurrence: spin-flip eigenvalue " + std::to_string(mu(i)) +
                           " below tolerance");
    lambda[i] = std::sqrt(std::max(mu(i), 0.0));
  }
  return lambda;
}

}  // namespace detail

inline WoottersSpectrum wootters_spectrum(const Mat4& rho) {
  const auto f = detail::spin_flip_factor(rho, false);
  WoottersSpectrum s;
  s.lambda = detail::clamp_roots(f.h.values);
  s.concurrence = std::clamp(s.lambda[0] - s.lambda[1] - s.lambda[2] - s.lambda[3], 0.0, 1.0);
  return s;
}

/// Wootters concurrence max{0, l1 - l2 - l3 - l4}.
inline double concurrence(const Mat4& rho) { return wootters_spectrum(rho).concurrence; }
inline double concurrence(const DensityMatrix& rho) { return concurrence(rho.matrix()); }

/// Gaps between consecutive Wootters roots below this are treated as
/// degenerate when differentiating.
inline constexpr double kDegenerateGap = 1e-8;
/// Roots below this contribute no gradient (subgradient 0 of sqrt at 0).
inline constexpr double kRootFloor = 1e-10;

struct ConcurrenceGradient {
  double value = 0.0;
  /// Hermitian G with dC = Tr(G d rho) for Hermitian perturbations.
  Mat4 grad = Mat4::Zero();
};

/// Concurrence together with its derivative with respect to rho.
///
/// For an eigenpair (mu, v) of H = W^dagger rho_f W the perturbation of mu is
///   d mu = Tr(d rho (b b^dagger / mu + d d^dagger)),
/// b = rho_f W v, d = conj(Y W v). The root ordering and the max{0, .} branch
/// are frozen at the evaluation point; when l1 and l2 are within
/// kDegenerateGap their signs are averaged (both contribute zero).
inline ConcurrenceGradient concurrence_with_gradient(const Mat4& rho) {
  const auto f = detail::spin_flip_factor(rho, true);
  const auto lambda = detail::clamp_roots(f.h.values);
  ConcurrenceGradient out;
  const double raw = lambda[0] - lambda[1] - lambda[2] - lambda[3];
  if (raw <= 0.0) return out;
  out.value = raw;

  std::array<double, 4> sign{1.0, -1.0, -1.0, -1.0};
  if (lambda[0] - lambda[1] < kDegenerateGap) sign[0] = sign[1] = 0.0;

  const Mat4& y = pauli::yy();
  for (int i = 0; i < 4; ++i) {
    if (sign[i] == 0.0 || lambda[i] < kRootFloor) continue;
    const double mu = lambda[i] * lambda[i];
    const Vec4 wv = f.w * f.h.vectors.col(i);
    const Vec4 b = f.flipped * wv;
    const Vec4 d = (y * wv).conjugate();
    const Mat4 dmu = b * b.adjoint() / mu + d * d.adjoint();
    out.grad += (sign[i] / (2.0 * lambda[i])) * dmu;
  }
  return out;
}

}  // namespace purikit
