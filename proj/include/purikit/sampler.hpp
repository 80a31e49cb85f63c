// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "purikit/errors.hpp"
#include "purikit/linalg.hpp"
#include "purikit/parallel.hpp"
#include "purikit/quantum.hpp"
#include "purikit/random.hpp"

namespace purikit {

inline constexpr int kBlochDim = 15;
/// K lies inside the ball of this radius around the origin.
inline const double kBlochRadius = std::sqrt(3.0) / 2.0;

/// B_i = sigma_a (x) sigma_b / 2 for (a, b) != (0, 0) in lexicographic order
/// (sigma_0 = I), then B_16 = I/2.
inline const std::array<Mat4, 16>& basis_matrices() {
  static const std::array<Mat4, 16> basis = [] {
    const std::array<Mat2, 4> s{pauli::identity(), pauli::x(), pauli::y(), pauli::z()};
    std::array<Mat4, 16> b;
    int n = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == 0 && j == 0) continue;
        b[n++] = kron(s[i], s[j]) * 0.5;
      }
    b[15] = Mat4::Identity() * 0.5;
    return b;
  }();
  return basis;
}

struct BlochVector {
  std::array<double, kBlochDim> a{};

  double norm() const {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
  }
  bool operator==(const BlochVector&) const = default;
};

/// rho(a) = sum a_i B_i + I/4.
inline Mat4 bloch_to_matrix(const BlochVector& v) {
  const auto& b = basis_matrices();
  Mat4 m = Mat4::Identity() * 0.25;
  for (int i = 0; i < kBlochDim; ++i) m += v.a[i] * b[i];
  return m;
}

inline DensityMatrix bloch_to_state(const BlochVector& v) {
  return DensityMatrix::trusted(bloch_to_matrix(v));
}

/// Inverse map a_i = Tr{B_i rho}.
inline BlochVector state_to_bloch(const DensityMatrix& rho) {
  const auto& b = basis_matrices();
  BlochVector v;
  for (int i = 0; i < kBlochDim; ++i) v.a[i] = (b[i] * rho.matrix()).trace().real();
  return v;
}

/// Elementary symmetric polynomials e2, e3, e4 of the eigenvalues of a
/// unit-trace Hermitian 4x4 matrix, from its power traces.
inline std::array<double, 3> symmetric_coefficients(const Mat4& m) {
  const Mat4 m2 = m * m;
  const double p2 = m2.trace().real();
  const double p3 = (m2 * m).trace().real();
  const double p4 = m2.squaredNorm();
  return {(1.0 - p2) / 2.0, (1.0 - 3.0 * p2 + 2.0 * p3) / 6.0,
          (1.0 - 6.0 * p2 + 3.0 * p2 * p2 + 8.0 * p3 - 6.0 * p4) / 24.0};
}

/// rho(a) >= 0. All eigenvalues are real, so by Descartes' rule they are
/// non-negative iff every coefficient e_k of the characteristic polynomial is.
inline bool membership(const BlochVector& v) {
  double n2 = 0.0;
  for (double x : v.a) n2 += x * x;
  if (n2 > 0.75) return false;
  const auto e = symmetric_coefficients(bloch_to_matrix(v));
  return e[0] >= 0.0 && e[1] >= 0.0 && e[2] >= 0.0;
}

struct ChainConfig {
  std::uint64_t seed = 0;
  std::size_t burn_in = 1000;
  std::size_t thinning = 1;
  std::size_t n_samples = 1;

  void validate() const {
    if (n_samples < 1) throw std::invalid_argument("ChainConfig: n_samples must be >= 1");
    if (thinning < 1) throw std::invalid_argument("ChainConfig: thinning must be >= 1");
  }
};

struct ChainState {
  BlochVector current;  // starts at the maximally mixed state
  Rng rng;
  std::uint64_t accepted_steps = 0;

  explicit ChainState(std::uint64_t seed) : rng(seed) {}
};

/// One hit-and-run move: isotropic direction, lambda uniform on an interval
/// that starts at [-r, r] and shrinks toward each rejected lambda.
inline void hit_and_run_step(ChainState& s) {
  std::array<double, kBlochDim> x;
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& xi : x) {
      xi = s.rng.normal();
      n2 += xi * xi;
    }
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  for (double& xi : x) xi *= inv;

  double lo = -kBlochRadius, hi = kBlochRadius;
  BlochVector trial;
  for (;;) {
    if (hi - lo < 1e-15)
      throw ChainStall("hit_and_run_step: interval collapsed without an accepted point");
    const double lambda = s.rng.uniform(lo, hi);
    for (int i = 0; i < kBlochDim; ++i) trial.a[i] = s.current.a[i] + lambda * x[i];
    if (membership(trial)) break;
    // The current point is inside K, so the chord contains 0; every rejected
    // lambda bounds it from one side.
    if (lambda > 0.0)
      hi = lambda;
    else
      lo = lambda;
  }
  s.current = trial;
  ++s.accepted_steps;
}

/// Incremental sampler: burn-in on the first call, then every thinning-th
/// state.
class Chain {
 public:
  explicit Chain(const ChainConfig& cfg) : cfg_(cfg), state_(cfg.seed) { cfg_.validate(); }

  BlochVector next() {
    if (!burned_) {
      for (std::size_t i = 0; i < cfg_.burn_in; ++i) hit_and_run_step(state_);
      burned_ = true;
    }
    for (std::size_t i = 0; i < cfg_.thinning; ++i) hit_and_run_step(state_);
    return state_.current;
  }

  const ChainState& state() const { return state_; }

 private:
  ChainConfig cfg_;
  ChainState state_;
  bool burned_ = false;
};

inline std::vector<BlochVector> sample_bloch(const ChainConfig& cfg) {
  Chain chain(cfg);
  std::vector<BlochVector> out;
  out.reserve(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) out.push_back(chain.next());
  return out;
}

inline std::vector<DensityMatrix> sample_states(const ChainConfig& cfg) {
  std::vector<DensityMatrix> out;
  out.reserve(cfg.n_samples);
  for (const auto& v : sample_bloch(cfg)) out.push_back(bloch_to_state(v));
  return out;
}

/// Independent chains with seeds cfg.seed + c, run in parallel and
/// concatenated in chain order.
inline std::vector<BlochVector> sample_chains(const ChainConfig& cfg, std::size_t chains) {
  if (chains < 1) throw std::invalid_argument("sample_chains: need at least one chain");
  cfg.validate();
  std::vector<std::vector<BlochVector>> parts(chains);
  parallel_tasks(chains, [&](std::size_t c) {
    ChainConfig local = cfg;
    local.seed = cfg.seed + c;
    parts[c] = sample_bloch(local);
  });
  std::vector<BlochVector> out;
  out.reserve(chains * cfg.n_samples);
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

inline std::vector<DensityMatrix> to_states(const std::vector<BlochVector>& v) {
  std::vector<DensityMatrix> out(v.size());
  parallel_for(v.size(), [&](std::size_t i) { out[i] = bloch_to_state(v[i]); });
  return out;
}

// Binary dump ----------------------------------------------------------------
//
// 32-byte header: "PURIKITA", u32 version, u32 reserved (0), u64 count,
// u64 seed; then count records of 15 f64. Everything little-endian.

inline constexpr char kDumpMagic[8] = {'P', 'U', 'R', 'I', 'K', 'I', 'T', 'A'};
inline constexpr std::uint32_t kDumpVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "dump I/O assumes a little-endian host");

struct Dump {
  std::uint64_t seed = 0;
  std::vector<BlochVector> records;
};

inline void write_dump(const std::string& path, const Dump& d) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  const std::uint32_t version = kDumpVersion, reserved = 0;
  const std::uint64_t count = d.records.size();
  f.write(kDumpMagic, 8);
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&reserved), 4);
  f.write(reinterpret_cast<const char*>(&count), 8);
  f.write(reinterpret_cast<const char*>(&d.seed), 8);
  for (const auto& r : d.records)
    f.write(reinterpret_cast<const char*>(r.a.data()), sizeof(double) * kBlochDim);
  if (!f) throw IoError("write to '" + path + "' failed");
}

inline Dump read_dump(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  char magic[8];
  std::uint32_t version = 0, reserved = 0;
  std::uint64_t count = 0;
  Dump d;
  f.read(magic, 8);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&reserved), 4);
  f.read(reinterpret_cast<char*>(&count), 8);
  f.read(reinterpret_cast<char*>(&d.seed), 8);
  if (!f || std::memcmp(magic, kDumpMagic, 8) != 0)
    throw IoError("'" + path + "' is not a state dump");
  if (version != kDumpVersion)
    throw IoError("'" + path + "': unsupported dump version " + std::to_string(version));
  d.records.resize(count);
  for (auto& r : d.records) {
    f.read(reinterpret_cast<char*>(r.a.data()), sizeof(double) * kBlochDim);
    if (!f) throw IoError("'" + path + "' is truncated");
  }
  return d;
}

}  // namespace purikit
