// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "purikit/eigen.hpp"
#include "purikit/errors.hpp"
#include "purikit/linalg.hpp"

// Qubit ordering for every two-pair (16-dimensional) operator in this library
// is A1, B1, A2, B2 with A1 as the most significant bit. A pair index is
// 2*a + b, so a 16-dim index is 4*pair1 + pair2.

namespace purikit {

/// Columns are the Bell states |1>..|4> in the computational basis
/// |00>,|01>,|10>,|11>:
///   |1> = (|01> - |10>)/sqrt2, |2> = (|01> + |10>)/sqrt2,
///   |3> = (|00> - |11>)/sqrt2, |4> = (|00> + |11>)/sqrt2.
inline const Mat4& bell_basis() {
  static const Mat4 basis = [] {
    const double h = 1.0 / std::sqrt(2.0);
    Mat4 b = Mat4::Zero();
    b(1, 0) = h;  b(2, 0) = -h;
    b(1, 1) = h;  b(2, 1) = h;
    b(0, 2) = h;  b(3, 2) = -h;
    b(0, 3) = h;  b(3, 3) = h;
    return b;
  }();
  return basis;
}

inline Vec4 bell_state(int k) {
  if (k < 1 || k > 4) throw std::invalid_argument("bell_state: k must be in 1..4");
  return bell_basis().col(k - 1);
}

inline Mat4 bell_projector(int k) {
  const Vec4 v = bell_state(k);
  return v * v.adjoint();
}

/// Reasons a 4x4 matrix fails to be a density matrix, or empty.
inline std::string density_matrix_violation(const Mat4& m, double tol = kStateTol) {
  if (!m.allFinite()) return "non-finite entries";
  if (!is_hermitian(m, tol)) return "not Hermitian";
  if (std::abs(m.trace() - 1.0) > tol) return "trace differs from 1";
  const double lo = jacobi_eigen<4>(m, false).values(3);
  if (lo < -tol) return "negative eigenvalue " + std::to_string(lo);
  return {};
}

/// Two-qubit state in the computational basis. Constructed through `checked`
/// (validates trace, Hermiticity, positivity) or `trusted` (for outputs of
/// maps whose invariants are covered by tests).
class DensityMatrix {
 public:
  DensityMatrix() : m_(Mat4::Identity() * 0.25) {}

  static DensityMatrix checked(const Mat4& m) {
    if (auto why = density_matrix_violation(m); !why.empty())
      throw std::invalid_argument("DensityMatrix: " + why);
    return DensityMatrix(m);
  }
  static DensityMatrix trusted(const Mat4& m) { return DensityMatrix(m); }

  static DensityMatrix maximally_mixed() { return DensityMatrix(); }
  static DensityMatrix bell(int k) { return DensityMatrix(bell_projector(k)); }

  const Mat4& matrix() const { return m_; }
  /// Bell-basis coefficients r_ij = <i|rho|j>.
  Mat4 in_bell_basis() const { return bell_basis().adjoint() * m_ * bell_basis(); }
  /// Overlap r_k = <k|rho|k>.
  double bell_overlap(int k) const {
    const Vec4 v = bell_state(k);
    return (v.adjoint() * m_ * v)(0, 0).real();
  }
  double purity() const { return (m_ * m_).trace().real(); }

 private:
  explicit DensityMatrix(const Mat4& m) : m_(m) {}
  Mat4 m_;
};

/// Build a state from Bell-basis coefficients r_ij (rho = sum r_ij |i><j|).
inline DensityMatrix bell_to_computational(const Mat4& r) {
  if (!is_hermitian(r, kStateTol))
    throw std::invalid_argument("bell_to_computational: coefficients not Hermitian");
  if (std::abs(r.trace() - 1.0) > kStateTol)
    throw std::invalid_argument("bell_to_computational: trace differs from 1");
  const Mat4 m = bell_basis() * r * bell_basis().adjoint();
  return DensityMatrix::checked(m);
}

inline Mat4 computational_to_bell(const DensityMatrix& rho) { return rho.in_bell_basis(); }

/// Unchecked conversions for hot loops.
inline Mat4 to_bell(const Mat4& m) { return bell_basis().adjoint() * m * bell_basis(); }
inline Mat4 from_bell(const Mat4& r) { return bell_basis() * r * bell_basis().adjoint(); }

/// State of two pairs (A1,B1) x (A2,B2).
struct PairState {
  Mat16 mat;
};

inline PairState tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return PairState{kron(a.matrix(), b.matrix())};
}

/// Trace over the second pair (A2, B2).
inline Mat4 partial_trace_second_pair(const Mat16& s) {
  Mat4 out = Mat4::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      cplx acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += s(4 * i + k, 4 * j + k);
      out(i, j) = acc;
    }
  return out;
}

inline DensityMatrix partial_trace_second_pair(const PairState& s) {
  return DensityMatrix::trusted(partial_trace_second_pair(s.mat));
}

/// Unnormalized first-pair block <k|_{A2B2} s |k>_{A2B2} for the 0-based
/// computational outcome index of (A2, B2).
inline Mat4 second_pair_block(const Mat16& s, int outcome0) {
  Mat4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = s(4 * i + outcome0, 4 * j + outcome0);
  return out;
}

/// Embed a single-qubit operator on qubit q (0 = A1, 1 = B1, 2 = A2, 3 = B2).
inline Mat16 on_qubit(int q, const Mat2& u) {
  Mat16 out = Mat16::Zero();
  const int shift = 3 - q;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      if ((i & ~(1 << shift)) != (j & ~(1 << shift))) continue;
      out(i, j) = u((i >> shift) & 1, (j >> shift) & 1);
    }
  return out;
}

/// Operator acting as `node_a` on (A1, A2) and `node_b` on (B1, B2); each
/// 4x4 factor uses its first qubit as the high bit.
inline Mat16 pair_operator(const Mat4& node_a, const Mat4& node_b) {
  Mat16 out;
  for (int i = 0; i < 16; ++i) {
    const int a1 = (i >> 3) & 1, b1 = (i >> 2) & 1, a2 = (i >> 1) & 1, b2 = i & 1;
    for (int j = 0; j < 16; ++j) {
      const int c1 = (j >> 3) & 1, d1 = (j >> 2) & 1, c2 = (j >> 1) & 1, d2 = j & 1;
      out(i, j) = node_a(2 * a1 + a2, 2 * c1 + c2) * node_b(2 * b1 + b2, 2 * d1 + d2);
    }
  }
  return out;
}

/// Measurement outcome labels k = 1..4 <-> (m, n) = (0,0), (0,1), (1,0), (1,1)
/// on (A2, B2).
struct MeasurementProjector {
  int k;
  Mat16 mat;
};

inline MeasurementProjector measurement_projector(int k) {
  if (k < 1 || k > 4) throw std::invalid_argument("measurement_projector: k must be in 1..4");
  Mat16 p = Mat16::Zero();
  for (int i = 0; i < 4; ++i) p(4 * i + (k - 1), 4 * i + (k - 1)) = 1.0;
  return {k, p};
}

struct Collapse {
  double probability = 0.0;
  bool degenerate = false;             // probability below kDegenerateFloor
  std::optional<DensityMatrix> state;  // set unless degenerate
};

/// Project (A2, B2) onto outcome k and return the normalized first pair.
inline Collapse measure_and_collapse(const PairState& s, int k) {
  if (k < 1 || k > 4) throw std::invalid_argument("measure_and_collapse: k must be in 1..4");
  const Mat4 block = second_pair_block(s.mat, k - 1);
  Collapse out;
  out.probability = block.trace().real();
  if (out.probability < kDegenerateFloor) {
    out.degenerate = true;
    return out;
  }
  out.state = DensityMatrix::trusted(block / out.probability);
  return out;
}

}  // namespace purikit
