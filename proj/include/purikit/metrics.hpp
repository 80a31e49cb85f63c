// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "purikit/concurrence.hpp"
#include "purikit/parallel.hpp"
#include "purikit/protocols.hpp"
#include "purikit/quantum.hpp"

namespace purikit {

struct SampleStats {
  double mean = 0.0;
  double sample_std = 0.0;  // unbiased, N - 1
  double std_error = 0.0;   // sample_std / sqrt(N)
};

/// Mean, sample standard deviation and standard error. Sums are pairwise in
/// a fixed order.
inline SampleStats aggregate(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("aggregate: need at least two values");
  const double n = static_cast<double>(v.size());
  SampleStats s;
  s.mean = pairwise_sum(v, 0.0) / n;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - s.mean) * (v[i] - s.mean);
  s.sample_std = std::sqrt(pairwise_sum(dev, 0.0) / (n - 1.0));
  s.std_error = s.sample_std / std::sqrt(n);
  return s;
}

struct IterationStats {
  int iteration = 0;
  SampleStats concurrence;
  SampleStats success;
  std::size_t n_nonzero = 0;  // states with C > 0
};

inline IterationStats make_iteration_stats(int iteration, const std::vector<double>& conc,
                                           const std::vector<double>& success) {
  IterationStats st;
  st.iteration = iteration;
  st.concurrence = aggregate(conc);
  st.success = aggregate(success);
  st.n_nonzero = static_cast<std::size_t>(
      std::count_if(conc.begin(), conc.end(), [](double c) { return c > 0.0; }));
  return st;
}

// Conditional fidelities --------------------------------------------------------

struct FidelityRecord {
  ProtocolKind kind;
  Attractor attractor;
  double value = 0.0;
};

/// Overlap with each attractor of `kind`, gated by that attractor's own
/// condition (each gate is evaluated independently).
inline std::vector<FidelityRecord> conditional_fidelity_bell(ProtocolKind kind, const Mat4& r) {
  using detail::sq;
  const double r1 = r(0, 0).real(), r2 = r(1, 1).real(), r3 = r(2, 2).real(), r4 = r(3, 3).real();
  auto rec = [&](Attractor a, bool gate, double overlap) {
    return FidelityRecord{kind, a, gate ? overlap : 0.0};
  };
  switch (kind) {
    case ProtocolKind::Bennett:
      return {rec(Attractor::Bell1, 2.0 * r1 > 1.0, r1)};
    case ProtocolKind::Deutsch:
      return {rec(Attractor::Bell4, (2.0 * r1 - 1.0) * (1.0 - 2.0 * r4) > 0.0, r4),
              rec(Attractor::Bell2, (2.0 * r2 - 1.0) * (1.0 - 2.0 * r3) > 0.0, r2)};
    case ProtocolKind::MFI: {
      const cplx r13 = r(0, 2), r24 = r(1, 3);
      return {rec(Attractor::Bell1,
                  (2.0 * r1 - 1.0) * (1.0 - 2.0 * r3) >
                      -sq(2.0 * r13.imag()) - sq(2.0 * r24.real()),
                  r1),
              rec(Attractor::Bell2,
                  (2.0 * r2 - 1.0) * (1.0 - 2.0 * r4) >
                      -sq(2.0 * r24.imag()) - sq(2.0 * r13.real()),
                  r2)};
    }
    case ProtocolKind::CNOT: {
      const cplx r14 = r(0, 3), r23 = r(1, 2);
      return {rec(Attractor::Bell4,
                  (2.0 * r1 - 1.0) * (1.0 - 2.0 * r4) >
                      -sq(2.0 * r23.imag()) - sq(2.0 * r14.real()),
                  r4),
              rec(Attractor::Bell2,
                  (2.0 * r2 - 1.0) * (1.0 - 2.0 * r3) >
                      -sq(2.0 * r14.imag()) - sq(2.0 * r23.real()),
                  r2)};
    }
  }
  return {};
}

inline std::vector<FidelityRecord> conditional_fidelity(ProtocolKind kind, const DensityMatrix& rho) {
  return conditional_fidelity_bell(kind, rho.in_bell_basis());
}

// Protocol sweeps --------------------------------------------------------------

/// Per-state values for iterations 0..iters, stored [iteration][state].
struct ProtocolRun {
  ProtocolKind kind;
  std::vector<std::vector<double>> concurrence;
  std::vector<std::vector<double>> success;
  /// [attractor slot][iteration][state], slots in attractors(kind) order.
  std::vector<std::vector<std::vector<double>>> fidelity;

  IterationStats stats(int i) const {
    return make_iteration_stats(i, concurrence.at(i), success.at(i));
  }
  std::vector<IterationStats> all_stats() const {
    std::vector<IterationStats> out;
    for (int i = 0; i < static_cast<int>(concurrence.size()); ++i) out.push_back(stats(i));
    return out;
  }
};

/// Success probability on row 0 is 0: nothing has been attempted yet.
/// With `with_fidelity`, fidelities are evaluated on every iterate; frozen
/// trajectories contribute 0.
inline ProtocolRun run_fixed_protocol(ProtocolKind kind, const std::vector<DensityMatrix>& states,
                                      int iters, bool with_fidelity = false) {
  if (iters < 0) throw std::invalid_argument("run_fixed_protocol: negative iteration count");
  const std::size_t n = states.size();
  const auto rows = static_cast<std::size_t>(iters) + 1;
  ProtocolRun run{kind, {}, {}, {}};
  run.concurrence.assign(rows, std::vector<double>(n, 0.0));
  run.success.assign(rows, std::vector<double>(n, 0.0));
  const std::size_t slots = attractors(kind).size();
  if (with_fidelity)
    run.fidelity.assign(slots, std::vector<std::vector<double>>(rows, std::vector<double>(n, 0.0)));

  parallel_for(n, [&](std::size_t j) {
    const DensityMatrix& rho = states[j];
    run.concurrence[0][j] = concurrence(rho);
    auto put_fidelity = [&](std::size_t row, const DensityMatrix& s) {
      if (!with_fidelity) return;
      const auto f = conditional_fidelity(kind, s);
      for (std::size_t a = 0; a < slots; ++a) run.fidelity[a][row][j] = f[a].value;
    };
    put_fidelity(0, rho);
    if (iters == 0) return;
    const auto traj = iterate(kind, rho, iters);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (traj[i].frozen) break;
      run.concurrence[i + 1][j] = traj[i].concurrence;
      run.success[i + 1][j] = traj[i].success_probability;
      put_fidelity(i + 1, traj[i].state);
    }
  });
  return run;
}

inline std::vector<IterationStats> evaluate_protocol(ProtocolKind kind,
                                                     const std::vector<DensityMatrix>& states,
                                                     int iters) {
  return run_fixed_protocol(kind, states, iters).all_stats();
}

// Asymptotic limits ------------------------------------------------------------

/// C = 1 for every state the protocol can purify, else 0.
inline SampleStats asymptotic_limit(ProtocolKind kind, const std::vector<DensityMatrix>& states) {
  std::vector<double> v(states.size());
  parallel_for(states.size(), [&](std::size_t j) {
    v[j] = purifiable(kind, states[j]) != Attractor::None ? 1.0 : 0.0;
  });
  return aggregate(v);
}

/// C = 1 for every entangled state.
inline SampleStats ultimate_limit(const std::vector<DensityMatrix>& states) {
  std::vector<double> v(states.size());
  parallel_for(states.size(),
               [&](std::size_t j) { v[j] = concurrence(states[j]) > 0.0 ? 1.0 : 0.0; });
  return aggregate(v);
}

// Histogram ----------------------------------------------------------------------

struct Histogram {
  std::size_t bins = 50;
  bool exclude_zero = true;
  std::vector<std::size_t> counts;

  double lo(std::size_t b) const { return static_cast<double>(b) / static_cast<double>(bins); }
  double hi(std::size_t b) const { return static_cast<double>(b + 1) / static_cast<double>(bins); }
  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

/// Uniform bins on [0, 1], half-open except the last, which is closed.
/// Values outside [0, 1] are rejected.
inline Histogram histogram(const std::vector<double>& values, std::size_t bins = 50,
                           bool exclude_zero = true) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  Histogram h;
  h.bins = bins;
  h.exclude_zero = exclude_zero;
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("histogram: value outside [0, 1]");
    if (exclude_zero && v == 0.0) continue;
    auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    ++h.counts[b];
  }
  return h;
}

}  // namespace purikit
