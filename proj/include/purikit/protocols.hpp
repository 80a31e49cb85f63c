// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "purikit/concurrence.hpp"
#include "purikit/errors.hpp"
#include "purikit/linalg.hpp"
#include "purikit/quantum.hpp"

namespace purikit {

enum class ProtocolKind { Bennett, Deutsch, MFI, CNOT };

inline constexpr std::array<ProtocolKind, 4> kAllProtocols{
    ProtocolKind::Bennett, ProtocolKind::Deutsch, ProtocolKind::MFI, ProtocolKind::CNOT};

inline std::string_view to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::Bennett: return "bennett";
    case ProtocolKind::Deutsch: return "deutsch";
    case ProtocolKind::MFI: return "mfi";
    case ProtocolKind::CNOT: return "cnot";
  }
  return "?";
}

inline ProtocolKind parse_protocol(std::string_view s) {
  for (auto k : kAllProtocols)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown protocol '" + std::string(s) + "'");
}

struct StepResult {
  DensityMatrix state;
  double success_probability = 0.0;
};

/// Which (A2, B2) outcome the CNOT-based protocol keeps.
enum class CnotKeep { Ones, Zeros };

// Local unitaries ----------------------------------------------------------

namespace local {

/// u1 = (I + i sx)/sqrt2, u2 = (I - i sy)/sqrt2, u3 = i|0><0| + |1><1|, u4 = I.
inline Mat2 u(int i) {
  const double h = 1.0 / std::sqrt(2.0);
  switch (i) {
    case 1: return (pauli::identity() + kI * pauli::x()) * h;
    case 2: return (pauli::identity() - kI * pauli::y()) * h;
    case 3: {
      Mat2 m = Mat2::Zero();
      m(0, 0) = kI;
      m(1, 1) = 1.0;
      return m;
    }
    case 4: return pauli::identity();
  }
  throw std::invalid_argument("local::u: index must be in 1..4");
}

/// K_j = u_j (x) u_j.
inline Mat4 K(int j) { return kron(u(j), u(j)); }

/// v_n = (i|0><0| + |1><1|) sx^n.
inline Mat2 v(int n) {
  Mat2 m = u(3);
  if (n % 2 != 0) m = m * pauli::x();
  return m;
}

}  // namespace local

/// Twirl written out as the 12-term sum over K_j, K_i.
inline Mat4 twirl_by_local_unitaries(const Mat4& rho) {
  Mat4 inner = Mat4::Zero();
  for (int i = 1; i <= 4; ++i) {
    const Mat4 kk = local::K(i) * local::K(i);
    inner += kk.adjoint() * rho * kk;
  }
  Mat4 out = Mat4::Zero();
  for (int j = 1; j <= 3; ++j) out += local::K(j).adjoint() * inner * local::K(j);
  return out / 12.0;
}

/// Bell diagonalization written out as the 4-term sum over K_i K_i.
inline Mat4 bell_diagonalize_by_local_unitaries(const Mat4& rho) {
  Mat4 out = Mat4::Zero();
  for (int i = 1; i <= 4; ++i) {
    const Mat4 kk = local::K(i) * local::K(i);
    out += kk.adjoint() * rho * kk;
  }
  return out / 4.0;
}

inline Mat4 werner_bell_coefficients(double r1) {
  Mat4 r = Mat4::Zero();
  r(0, 0) = r1;
  r(1, 1) = r(2, 2) = r(3, 3) = (1.0 - r1) / 3.0;
  return r;
}

inline DensityMatrix werner_state(double r1) {
  return DensityMatrix::trusted(from_bell(werner_bell_coefficients(r1)));
}

inline DensityMatrix bell_diagonal_state(const std::array<double, 4>& r) {
  Mat4 b = Mat4::Zero();
  for (int i = 0; i < 4; ++i) b(i, i) = r[i];
  return DensityMatrix::trusted(from_bell(b));
}

/// Werner form keeping r1 = <1|rho|1>.
inline DensityMatrix twirl_to_werner(const DensityMatrix& rho) {
  return werner_state(rho.bell_overlap(1));
}

/// Drop all Bell-basis coherences, keeping the diagonal r_i.
inline DensityMatrix bell_diagonalize(const DensityMatrix& rho) {
  const Mat4 r = rho.in_bell_basis();
  return bell_diagonal_state({r(0, 0).real(), r(1, 1).real(), r(2, 2).real(), r(3, 3).real()});
}

// Closed-form maps ---------------------------------------------------------

struct WernerStep {
  double r1 = 0.0;
  double success_probability = 0.0;
};

inline WernerStep bennett_step(double r1) {
  if (!(r1 >= 0.0 && r1 <= 1.0)) throw std::invalid_argument("bennett_step: r1 outside [0,1]");
  const double den = 5.0 - 4.0 * r1 + 8.0 * r1 * r1;
  return {(1.0 - 2.0 * r1 + 10.0 * r1 * r1) / den, den / 9.0};
}

struct BellDiagonalStep {
  std::array<double, 4> r{};
  double success_probability = 0.0;
};

inline BellDiagonalStep deutsch_step(const std::array<double, 4>& r) {
  for (double x : r)
    if (x < -kStateTol) throw std::invalid_argument("deutsch_step: negative coefficient");
  if (std::abs(r[0] + r[1] + r[2] + r[3] - 1.0) > kStateTol)
    throw std::invalid_argument("deutsch_step: coefficients do not sum to 1");
  const double c = (r[0] + r[3]) * (r[0] + r[3]) + (r[1] + r[2]) * (r[1] + r[2]);
  // c >= 1/2 for normalized input.
  if (c < kDegenerateFloor) throw DegenerateInput("deutsch_step: vanishing success probability");
  BellDiagonalStep out;
  out.r = {2.0 * r[1] * r[2] / c, (r[1] * r[1] + r[2] * r[2]) / c, 2.0 * r[0] * r[3] / c,
           (r[0] * r[0] + r[3] * r[3]) / c};
  out.success_probability = c;
  return out;
}

struct BellMapStep {
  Mat4 r;                        // output Bell coefficients
  double success_probability = 0.0;
};

/// MFI map on Bell coefficients (0-based indices: r(0,2) is r_13).
inline BellMapStep mfi_map(const Mat4& r) {
  const cplx r1 = r(0, 0), r2 = r(1, 1), r3 = r(2, 2), r4 = r(3, 3);
  const cplx r13 = r(0, 2), r31 = r(2, 0), r24 = r(1, 3), r42 = r(3, 1);
  const double d = std::real((r1 + r3) * (r1 + r3) + (r2 + r4) * (r2 + r4) -
                             (r13 + r31) * (r13 + r31) - (r24 + r42) * (r24 + r42));
  if (d < kDegenerateFloor) throw DegenerateInput("mfi_step: vanishing normalization D");
  Mat4 o = Mat4::Zero();
  o(0, 0) = std::real(r1 * r1 + r3 * r3 - r13 * r13 - r31 * r31);
  o(1, 1) = std::real(r2 * r2 + r4 * r4 - r24 * r24 - r42 * r42);
  o(2, 2) = 2.0 * std::real(r2 * r4 - std::norm(r24));
  o(3, 3) = 2.0 * std::real(r1 * r3 - std::norm(r13));
  o(0, 1) = r(0, 1) * r(0, 1) + r(2, 3) * r(2, 3) - r(0, 3) * r(0, 3) - r(2, 1) * r(2, 1);
  o(2, 3) = 2.0 * (r(1, 0) * r(3, 2) - r(1, 2) * r(3, 0));
  o(1, 0) = std::conj(o(0, 1));
  o(3, 2) = std::conj(o(2, 3));
  return {o / d, d / 2.0};
}

/// CNOT-based map (outcome m = n = 1 kept) on Bell coefficients.
inline BellMapStep cnot_map(const Mat4& r) {
  const cplx r1 = r(0, 0), r2 = r(1, 1), r3 = r(2, 2), r4 = r(3, 3);
  const cplx r14 = r(0, 3), r41 = r(3, 0), r23 = r(1, 2), r32 = r(2, 1);
  const double e = std::real((r1 + r4) * (r1 + r4) + (r2 + r3) * (r2 + r3) +
                             (r14 - r41) * (r14 - r41) + (r23 - r32) * (r23 - r32));
  if (e < kDegenerateFloor) throw DegenerateInput("cnot_step: vanishing normalization E");
  Mat4 o = Mat4::Zero();
  o(0, 0) = 2.0 * std::real(r2 * r3 - std::norm(r23));
  o(1, 1) = std::real(r2 * r2 + r3 * r3 + r23 * r23 + r32 * r32);
  o(2, 2) = 2.0 * std::real(r1 * r4 - std::norm(r14));
  o(3, 3) = std::real(r1 * r1 + r4 * r4 + r14 * r14 + r41 * r41);
  o(0, 2) = 2.0 * (r(1, 3) * r(2, 0) - r(1, 0) * r(2, 3));
  o(1, 3) = r(1, 0) * r(1, 0) + r(2, 0) * r(2, 0) + r(1, 3) * r(1, 3) + r(2, 3) * r(2, 3);
  o(2, 0) = std::conj(o(0, 2));
  o(3, 1) = std::conj(o(1, 3));
  return {o / e, e / 2.0};
}

inline StepResult mfi_step(const DensityMatrix& rho) {
  const auto s = mfi_map(rho.in_bell_basis());
  return {DensityMatrix::trusted(from_bell(s.r)), s.success_probability};
}

inline StepResult circuit_cnot(const DensityMatrix& rho, CnotKeep keep);

/// CNOT-based step. The default keeps m = n = 1 through the closed-form map;
/// CnotKeep::Zeros has no sparse closed form and runs the circuit.
inline StepResult cnot_step(const DensityMatrix& rho, CnotKeep keep = CnotKeep::Ones) {
  if (keep == CnotKeep::Zeros) return circuit_cnot(rho, keep);
  const auto s = cnot_map(rho.in_bell_basis());
  return {DensityMatrix::trusted(from_bell(s.r)), s.success_probability};
}

// Circuit-level reference --------------------------------------------------

namespace circuit {

/// CNOT(A1 -> A2) CNOT(B1 -> B2) in the A1,B1,A2,B2 ordering.
inline const Mat16& bilateral_cnot() {
  static const Mat16 op = [] {
    Mat16 m = Mat16::Zero();
    for (int i = 0; i < 16; ++i) {
      int j = i;
      if (i & 8) j ^= 2;  // A1 controls A2
      if (i & 4) j ^= 1;  // B1 controls B2
      m(j, i) = 1.0;
    }
    return m;
  }();
  return op;
}

inline Mat16 local_product(const Mat2& a1, const Mat2& b1, const Mat2& a2, const Mat2& b2) {
  return on_qubit(0, a1) * on_qubit(1, b1) * on_qubit(2, a2) * on_qubit(3, b2);
}

/// Unitary for the Deutsch / CNOT-based preparation: u1^dag on A, u1 on B,
/// followed by the bilateral CNOT.
inline Mat16 deutsch_unitary() {
  const Mat2 u1 = local::u(1);
  return bilateral_cnot() * local_product(u1.adjoint(), u1, u1.adjoint(), u1);
}

inline Mat16 bennett_unitary() {
  const Mat2 y = pauli::y();
  const Mat2 id = pauli::identity();
  return bilateral_cnot() * local_product(y, id, y, id);
}

struct Kept {
  Mat4 block = Mat4::Zero();  // unnormalized first-pair state
  double probability = 0.0;
};

inline Kept keep_outcomes(const Mat16& s, std::initializer_list<int> outcomes0) {
  Kept k;
  for (int o : outcomes0) k.block += second_pair_block(s, o);
  k.probability = k.block.trace().real();
  return k;
}

inline StepResult normalized(const Kept& k, const char* who) {
  if (k.probability < kDegenerateFloor)
    throw DegenerateInput(std::string(who) + ": kept outcomes have vanishing probability");
  return {DensityMatrix::trusted(hermitian_part(k.block / k.probability)), k.probability};
}

}  // namespace circuit

inline StepResult circuit_cnot(const DensityMatrix& rho, CnotKeep keep) {
  const Mat16 u = circuit::deutsch_unitary();
  const Mat16 s = u * kron(rho.matrix(), rho.matrix()) * u.adjoint();
  const int outcome = keep == CnotKeep::Ones ? 3 : 0;
  return circuit::normalized(circuit::keep_outcomes(s, {outcome}), "cnot circuit");
}

/// Runs the protocol step list with explicit 16x16 operators. Bennett and
/// Deutsch include their twirl / Bell-diagonalization as K-sums.
inline StepResult circuit_oracle(ProtocolKind kind, const DensityMatrix& rho) {
  switch (kind) {
    case ProtocolKind::Bennett: {
      const Mat4 w = twirl_by_local_unitaries(rho.matrix());
      const Mat16 u = circuit::bennett_unitary();
      const Mat16 s = u * kron(w, w) * u.adjoint();
      auto kept = circuit::keep_outcomes(s, {0, 3});
      const Mat4 y = kron(pauli::y(), pauli::identity());
      kept.block = y * kept.block * y.adjoint();
      return circuit::normalized(kept, "bennett circuit");
    }
    case ProtocolKind::Deutsch: {
      const Mat4 b = bell_diagonalize_by_local_unitaries(rho.matrix());
      const Mat16 u = circuit::deutsch_unitary();
      const Mat16 s = u * kron(b, b) * u.adjoint();
      return circuit::normalized(circuit::keep_outcomes(s, {0, 3}), "deutsch circuit");
    }
    case ProtocolKind::MFI: {
      const Mat4 m = bell_projector(1) + bell_projector(3);
      const Mat16 pi = pair_operator(m, m);
      Mat16 s = pi * kron(rho.matrix(), rho.matrix()) * pi.adjoint();
      const double acceptance = s.trace().real();
      if (acceptance < kDegenerateFloor)
        throw DegenerateInput("mfi circuit: projector annihilates the input");
      s /= acceptance;
      Mat4 total = Mat4::Zero();
      for (int m_out = 0; m_out < 2; ++m_out)
        for (int n_out = 0; n_out < 2; ++n_out) {
          const Mat4 block = second_pair_block(s, 2 * m_out + n_out);
          const Mat4 fix = kron(local::v(m_out), local::v(n_out + 1));
          total += fix * block * fix.adjoint();
        }
      return {DensityMatrix::trusted(hermitian_part(total)), acceptance};
    }
    case ProtocolKind::CNOT:
      return circuit_cnot(rho, CnotKeep::Ones);
  }
  throw std::invalid_argument("circuit_oracle: unknown protocol");
}

// Purifiability ------------------------------------------------------------

enum class Attractor { None, Bell1, Bell2, Bell4 };

inline int bell_index(Attractor a) {
  switch (a) {
    case Attractor::Bell1: return 1;
    case Attractor::Bell2: return 2;
    case Attractor::Bell4: return 4;
    case Attractor::None: return 0;
  }
  return 0;
}

inline std::string_view to_string(Attractor a) {
  switch (a) {
    case Attractor::Bell1: return "1";
    case Attractor::Bell2: return "2";
    case Attractor::Bell4: return "4";
    case Attractor::None: return "none";
  }
  return "?";
}

/// Attractors a protocol can reach, in reporting order.
inline std::vector<Attractor> attractors(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Bennett: return {Attractor::Bell1};
    case ProtocolKind::Deutsch: return {Attractor::Bell4, Attractor::Bell2};
    case ProtocolKind::MFI: return {Attractor::Bell1, Attractor::Bell2};
    case ProtocolKind::CNOT: return {Attractor::Bell4, Attractor::Bell2};
  }
  return {};
}

namespace detail {
inline double sq(double x) { return x * x; }
}  // namespace detail

/// Evaluates the purification conditions on the Bell coefficients of rho and
/// returns the attractor of the first condition that holds. Bennett and
/// Deutsch conditions only involve diagonal coefficients, so the twirl /
/// Bell-diagonalization preprocessing does not change the result.
inline Attractor purifiable_bell(ProtocolKind kind, const Mat4& r, CnotKeep branch = CnotKeep::Ones) {
  using detail::sq;
  const double r1 = r(0, 0).real(), r2 = r(1, 1).real(), r3 = r(2, 2).real(), r4 = r(3, 3).real();
  switch (kind) {
    case ProtocolKind::Bennett:
      return 2.0 * r1 - 1.0 > 0.0 ? Attractor::Bell1 : Attractor::None;
    case ProtocolKind::Deutsch:
      if ((2.0 * r1 - 1.0) * (1.0 - 2.0 * r4) > 0.0) return Attractor::Bell4;
      if ((2.0 * r2 - 1.0) * (1.0 - 2.0 * r3) > 0.0) return Attractor::Bell2;
      return Attractor::None;
    case ProtocolKind::MFI: {
      const cplx r13 = r(0, 2), r24 = r(1, 3);
      if ((2.0 * r1 - 1.0) * (1.0 - 2.0 * r3) > -sq(2.0 * r13.imag()) - sq(2.0 * r24.real()))
        return Attractor::Bell1;
      if ((2.0 * r2 - 1.0) * (1.0 - 2.0 * r4) > -sq(2.0 * r24.imag()) - sq(2.0 * r13.real()))
        return Attractor::Bell2;
      return Attractor::None;
    }
    case ProtocolKind::CNOT: {
      const cplx r14 = r(0, 3), r23 = r(1, 2);
      const double s = branch == CnotKeep::Ones ? -1.0 : 1.0;
      if ((2.0 * r1 - 1.0) * (1.0 - 2.0 * r4) > s * (sq(2.0 * r23.imag()) + sq(2.0 * r14.real())))
        return Attractor::Bell4;
      if ((2.0 * r2 - 1.0) * (1.0 - 2.0 * r3) > s * (sq(2.0 * r14.imag()) + sq(2.0 * r23.real())))
        return Attractor::Bell2;
      return Attractor::None;
    }
  }
  return Attractor::None;
}

inline Attractor purifiable(ProtocolKind kind, const DensityMatrix& rho,
                            CnotKeep branch = CnotKeep::Ones) {
  return purifiable_bell(kind, rho.in_bell_basis(), branch);
}

// Iteration ----------------------------------------------------------------

struct TrajectoryStep {
  DensityMatrix state;
  double success_probability = 0.0;  // zero once frozen
  double concurrence = 0.0;
  bool frozen = false;
};

/// Applies the closed-form map n times. Once the concurrence reaches zero (or
/// a step degenerates) the trajectory is frozen: concurrence and success
/// probability are reported as zero for every later iteration.
inline std::vector<TrajectoryStep> iterate(ProtocolKind kind, const DensityMatrix& rho, int n) {
  if (n < 1) throw std::invalid_argument("iterate: n must be >= 1");
  std::vector<TrajectoryStep> out;
  out.reserve(static_cast<std::size_t>(n));

  bool frozen = !(concurrence(rho) > 0.0);
  DensityMatrix current = rho;
  Mat4 bell = rho.in_bell_basis();
  double werner_r1 = bell(0, 0).real();
  std::array<double, 4> diag{};
  for (int i = 0; i < 4; ++i) diag[i] = std::max(bell(i, i).real(), 0.0);

  for (int it = 0; it < n; ++it) {
    TrajectoryStep step{current, 0.0, 0.0, true};
    if (!frozen) {
      try {
        double p = 0.0;
        switch (kind) {
          case ProtocolKind::Bennett: {
            const auto s = bennett_step(std::clamp(werner_r1, 0.0, 1.0));
            werner_r1 = s.r1;
            p = s.success_probability;
            current = werner_state(werner_r1);
            break;
          }
          case ProtocolKind::Deutsch: {
            const double total = diag[0] + diag[1] + diag[2] + diag[3];
            for (double& x : diag) x /= total;
            const auto s = deutsch_step(diag);
            diag = s.r;
            p = s.success_probability;
            current = bell_diagonal_state(diag);
            break;
          }
          case ProtocolKind::MFI:
          case ProtocolKind::CNOT: {
            const auto s = kind == ProtocolKind::MFI ? mfi_map(bell) : cnot_map(bell);
            bell = s.r;
            p = s.success_probability;
            current = DensityMatrix::trusted(from_bell(bell));
            break;
          }
        }
        const double c = concurrence(current);
        if (c > 0.0) {
          step = {current, p, c, false};
        } else {
          frozen = true;
          step.state = current;
        }
      } catch (const DegenerateInput&) {
        frozen = true;
      }
    }
    out.push_back(step);
  }
  return out;
}

}  // namespace purikit
