// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "purikit/linalg.hpp"

namespace purikit {

// Generalized Gell-Mann matrices for su(4), normalized Tr{s_i s_j} = 2 d_ij.
// Ordering: s1..s3 on levels (1,2); s4,s5 on (1,3); s6,s7 on (2,3);
// s8 = diag(1,1,-2,0)/sqrt3; s9,s10 on (1,4); s11,s12 on (2,4);
// s13,s14 on (3,4); s15 = diag(1,1,1,-3)/sqrt6. Within a pair the symmetric
// (x-like) matrix comes first.

namespace detail {

struct GeneratorShape {
  enum Kind { Sym, Anti, Diag } kind;
  int j = 0, k = 0;           // level pair for Sym / Anti
  std::array<double, 4> d{};  // diagonal for Diag
};

inline GeneratorShape generator_shape(int i) {
  using G = GeneratorShape;
  const double r3 = 1.0 / std::sqrt(3.0), r6 = 1.0 / std::sqrt(6.0);
  switch (i) {
    case 1: return {G::Sym, 0, 1, {}};
    case 2: return {G::Anti, 0, 1, {}};
    case 3: return {G::Diag, 0, 0, {1.0, -1.0, 0.0, 0.0}};
    case 4: return {G::Sym, 0, 2, {}};
    case 5: return {G::Anti, 0, 2, {}};
    case 6: return {G::Sym, 1, 2, {}};
    case 7: return {G::Anti, 1, 2, {}};
    case 8: return {G::Diag, 0, 0, {r3, r3, -2.0 * r3, 0.0}};
    case 9: return {G::Sym, 0, 3, {}};
    case 10: return {G::Anti, 0, 3, {}};
    case 11: return {G::Sym, 1, 3, {}};
    case 12: return {G::Anti, 1, 3, {}};
    case 13: return {G::Sym, 2, 3, {}};
    case 14: return {G::Anti, 2, 3, {}};
    case 15: return {G::Diag, 0, 0, {r6, r6, r6, -3.0 * r6}};
  }
  throw std::invalid_argument("gell_mann: index must be in 1..15");
}

}  // namespace detail

inline Mat4 gell_mann(int i) {
  const auto s = detail::generator_shape(i);
  Mat4 m = Mat4::Zero();
  switch (s.kind) {
    case detail::GeneratorShape::Sym:
      m(s.j, s.k) = m(s.k, s.j) = 1.0;
      break;
    case detail::GeneratorShape::Anti:
      m(s.j, s.k) = -kI;
      m(s.k, s.j) = kI;
      break;
    case detail::GeneratorShape::Diag:
      for (int a = 0; a < 4; ++a) m(a, a) = s.d[a];
      break;
  }
  return m;
}

/// exp(i alpha s_i) in closed form. Off-diagonal generators square to the
/// projector on their level pair.
inline Mat4 gell_mann_exp(int i, double alpha) {
  const auto s = detail::generator_shape(i);
  Mat4 m = Mat4::Identity();
  const double c = std::cos(alpha), sn = std::sin(alpha);
  switch (s.kind) {
    case detail::GeneratorShape::Sym:
      m(s.j, s.j) = m(s.k, s.k) = c;
      m(s.j, s.k) = m(s.k, s.j) = kI * sn;
      break;
    case detail::GeneratorShape::Anti:
      m(s.j, s.j) = m(s.k, s.k) = c;
      m(s.j, s.k) = sn;
      m(s.k, s.j) = -sn;
      break;
    case detail::GeneratorShape::Diag:
      for (int a = 0; a < 4; ++a) m(a, a) = std::polar(1.0, alpha * s.d[a]);
      break;
  }
  return m;
}

/// Generator of each of the 15 Euler factors, left to right.
inline constexpr std::array<int, 15> kEulerGenerators{3, 2, 3, 5, 3, 10, 3, 2,
                                                      3, 5, 3, 2, 3, 8, 15};

/// Upper bound of angle m (0-based); every lower bound is 0.
inline double euler_upper_bound(int m) {
  if (m < 0 || m > 14) throw std::invalid_argument("euler_upper_bound: index must be in 0..14");
  if (m == 13) return std::numbers::pi / std::sqrt(3.0);
  if (m == 14) return std::numbers::pi / std::sqrt(6.0);
  return m % 2 == 0 ? std::numbers::pi : std::numbers::pi / 2.0;
}

inline void check_euler_bounds(const double* alpha) {
  for (int m = 0; m < 15; ++m) {
    if (!(alpha[m] >= 0.0 && alpha[m] <= euler_upper_bound(m)))
      throw std::invalid_argument("su4_unitary: angle " + std::to_string(m + 1) + " = " +
                                  std::to_string(alpha[m]) + " outside its bounds");
  }
}

/// Factors E_m = exp(i s_{g_m} alpha_m) of the Euler product.
inline std::array<Mat4, 15> euler_factors(const double* alpha) {
  std::array<Mat4, 15> f;
  for (int m = 0; m < 15; ++m) f[m] = gell_mann_exp(kEulerGenerators[m], alpha[m]);
  return f;
}

/// U(alpha) = E_1 E_2 ... E_15.
inline Mat4 su4_unitary(const std::array<double, 15>& alpha) {
  check_euler_bounds(alpha.data());
  Mat4 u = Mat4::Identity();
  for (const auto& e : euler_factors(alpha.data())) u = u * e;
  return u;
}

/// dU/dalpha_m for every m, from prefix / suffix products.
inline std::array<Mat4, 15> su4_derivatives(const double* alpha) {
  const auto f = euler_factors(alpha);
  std::array<Mat4, 16> prefix, suffix;  // prefix[m] = E_1..E_m, suffix[m] = E_{m+1}..E_15
  prefix[0] = Mat4::Identity();
  for (int m = 0; m < 15; ++m) prefix[m + 1] = prefix[m] * f[m];
  suffix[15] = Mat4::Identity();
  for (int m = 14; m >= 0; --m) suffix[m] = f[m] * suffix[m + 1];
  std::array<Mat4, 15> d;
  for (int m = 0; m < 15; ++m)
    d[m] = prefix[m] * (kI * gell_mann(kEulerGenerators[m])) * suffix[m];
  return d;
}

}  // namespace purikit
