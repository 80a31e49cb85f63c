// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "purikit/concurrence.hpp"
#include "purikit/errors.hpp"
#include "purikit/gellmann.hpp"
#include "purikit/lbfgsb.hpp"
#include "purikit/linalg.hpp"
#include "purikit/metrics.hpp"
#include "purikit/parallel.hpp"
#include "purikit/quantum.hpp"
#include "purikit/random.hpp"

namespace purikit {

/// 30 angles: alpha[0..14] for node A, alpha[15..29] for node B.
struct EulerAngles {
  std::array<double, 30> alpha{};

  std::array<double, 15> a() const {
    std::array<double, 15> out;
    std::copy_n(alpha.begin(), 15, out.begin());
    return out;
  }
  std::array<double, 15> b() const {
    std::array<double, 15> out;
    std::copy_n(alpha.begin() + 15, 15, out.begin());
    return out;
  }

  static double upper(int i) { return euler_upper_bound(i % 15); }
  static VecX lower_bounds() { return VecX::Zero(30); }
  static VecX upper_bounds() {
    VecX u(30);
    for (int i = 0; i < 30; ++i) u(i) = upper(i);
    return u;
  }

  bool in_bounds() const {
    for (int i = 0; i < 30; ++i)
      if (!(alpha[i] >= 0.0 && alpha[i] <= upper(i))) return false;
    return true;
  }

  VecX to_vector() const { return Eigen::Map<const VecX>(alpha.data(), 30); }
  static EulerAngles from_vector(const VecX& v) {
    EulerAngles e;
    for (int i = 0; i < 30; ++i) e.alpha[i] = v(i);
    return e;
  }
  bool operator==(const EulerAngles&) const = default;
};

/// V = U_A on (A1, A2) times U_B on (B1, B2).
inline Mat16 pair_unitary(const EulerAngles& angles) {
  return pair_operator(su4_unitary(angles.a()), su4_unitary(angles.b()));
}

// Policies and plans -------------------------------------------------------------

struct MeasurementPolicy {
  enum class Kind { Greedy, Fixed } kind = Kind::Greedy;
  int k = 1;  // outcome for Fixed, 1..4

  static MeasurementPolicy greedy() { return {Kind::Greedy, 1}; }
  static MeasurementPolicy fixed(int k) {
    if (k < 1 || k > 4) throw std::invalid_argument("fixed policy outcome must be in 1..4");
    return {Kind::Fixed, k};
  }
  bool is_greedy() const { return kind == Kind::Greedy; }

  std::string to_string() const {
    return is_greedy() ? std::string("greedy") : "fixed:" + std::to_string(k);
  }
  static MeasurementPolicy parse(std::string_view s) {
    if (s == "greedy") return greedy();
    if (s.size() == 7 && s.substr(0, 6) == "fixed:" && s[6] >= '1' && s[6] <= '4')
      return fixed(s[6] - '0');
    throw std::invalid_argument("unknown policy '" + std::string(s) + "' (greedy | fixed:k)");
  }
};

/// Entanglement-destroying projector M2 (x) M2 with M2 = I - |2><2|.
inline const Mat16& special_projector() {
  static const Mat16 p = [] {
    const Mat4 m2 = Mat4::Identity() - bell_projector(2);
    return pair_operator(m2, m2);
  }();
  return p;
}

struct RoundPlan {
  enum class Op { SpecialProjector, Unitary } op = Op::Unitary;
  EulerAngles angles;
  MeasurementPolicy policy;

  static RoundPlan projector(MeasurementPolicy p) { return {Op::SpecialProjector, {}, p}; }
  static RoundPlan unitary(const EulerAngles& a, MeasurementPolicy p) { return {Op::Unitary, a, p}; }

  Mat16 operation() const {
    return op == Op::SpecialProjector ? special_projector() : pair_unitary(angles);
  }
};

// Measurement branches ---------------------------------------------------------

struct Branches {
  double acceptance = 1.0;               // Tr{Pi^dag Pi rho (x) rho}
  std::array<double, 4> probability{};   // p_k of the normalized state
  std::array<Mat4, 4> state;             // valid where probability >= floor
  std::array<double, 4> concurrence{};   // 0 where degenerate
  bool available(int k0) const { return probability[k0] >= kDegenerateFloor; }
};

/// Applies `op` to rho (x) rho and evaluates all four (A2, B2) outcomes.
/// Throws DegenerateInput when the operation annihilates the input.
inline Branches measure_branches(const Mat4& rho, const Mat16& op) {
  const Mat16 pair = kron(rho, rho);
  Mat16 s = op * pair * op.adjoint();
  Branches b;
  b.acceptance = s.trace().real();
  if (b.acceptance < kDegenerateFloor)
    throw DegenerateInput("variational step: operation annihilates the input");
  s /= b.acceptance;
  for (int k = 0; k < 4; ++k) {
    const Mat4 blk = second_pair_block(s, k);
    b.probability[k] = blk.trace().real();
    if (b.available(k)) {
      b.state[k] = hermitian_part(blk / b.probability[k]);
      b.concurrence[k] = concurrence(b.state[k]);
    } else {
      b.state[k].setZero();
    }
  }
  return b;
}

/// 0-based outcome chosen by the policy, or -1 when no allowed outcome has
/// non-vanishing probability. Greedy ties go to the lowest k.
inline int select_outcome(const MeasurementPolicy& policy, const Branches& b) {
  if (!policy.is_greedy()) return b.available(policy.k - 1) ? policy.k - 1 : -1;
  int best = -1;
  for (int k = 0; k < 4; ++k) {
    if (!b.available(k)) continue;
    if (best < 0 || b.concurrence[k] > b.concurrence[best]) best = k;
  }
  return best;
}

struct VariationalStep {
  StepResult result;  // success = p_k * acceptance
  int outcome = 0;    // 1..4
  double acceptance = 1.0;
  double concurrence = 0.0;
};

inline VariationalStep variational_step(const DensityMatrix& rho, const RoundPlan& plan) {
  const auto b = measure_branches(rho.matrix(), plan.operation());
  const int k = select_outcome(plan.policy, b);
  if (k < 0) throw DegenerateInput("variational step: selected outcome has vanishing probability");
  return {{DensityMatrix::trusted(b.state[k]), b.probability[k] * b.acceptance},
          k + 1,
          b.acceptance,
          b.concurrence[k]};
}

// Cost and gradient ------------------------------------------------------------

namespace detail {

inline int node_a_index(int i) { return 2 * ((i >> 3) & 1) + ((i >> 1) & 1); }
inline int node_b_index(int i) { return 2 * ((i >> 2) & 1) + (i & 1); }

struct CostAccumulator {
  double concurrence = 0.0;
  Mat16 z = Mat16::Zero();
  int degenerate = 0;

  CostAccumulator operator+(const CostAccumulator& o) const {
    return {concurrence + o.concurrence, z + o.z, degenerate + o.degenerate};
  }
};

}  // namespace detail

/// Average-concurrence cost 1 - mean C over a fixed sample. For the greedy
/// policy the outcome of every state is frozen by `select` and kept until the
/// next call, so value and gradient are smooth between selections.
class VariationalObjective {
 public:
  VariationalObjective(std::vector<Mat4> sample, MeasurementPolicy policy)
      : sample_(std::move(sample)), policy_(policy), outcome_(sample_.size(), policy.k - 1) {
    if (sample_.empty()) throw std::invalid_argument("variational cost: empty sample");
  }

  std::size_t size() const { return sample_.size(); }
  const MeasurementPolicy& policy() const { return policy_; }
  const std::vector<int>& outcomes() const { return outcome_; }
  int degenerate() const { return degenerate_; }

  /// Greedy argmax at `angles` (no-op for a fixed policy).
  void select(const EulerAngles& angles) {
    if (!policy_.is_greedy()) return;
    const Mat16 v = pair_unitary(angles);
    parallel_for(sample_.size(), [&](std::size_t j) {
      const auto b = measure_branches(sample_[j], v);
      outcome_[j] = std::max(select_outcome(policy_, b), 0);
    });
  }

  /// Cost at `angles` with the current outcome selection; fills `grad`
  /// (30 entries) when given.
  double evaluate(const EulerAngles& angles, std::array<double, 30>* grad = nullptr) {
    const Mat4 ua = su4_unitary(angles.a());
    const Mat4 ub = su4_unitary(angles.b());
    const Mat16 v = pair_operator(ua, ub);
    const bool want = grad != nullptr;

    const auto acc = parallel_sum(sample_.size(), detail::CostAccumulator{}, [&](std::size_t j) {
      detail::CostAccumulator a;
      const int k = outcome_[j];
      // Rows 4i + k of V produce the kept block directly.
      Eigen::Matrix<cplx, 4, 16> vk;
      for (int i = 0; i < 4; ++i) vk.row(i) = v.row(4 * i + k);
      const Mat16 pair = kron(sample_[j], sample_[j]);
      const Eigen::Matrix<cplx, 16, 4> pv = pair * vk.adjoint();
      const Mat4 blk = vk * pv;
      const double p = blk.trace().real();
      if (p < kDegenerateFloor) {
        a.degenerate = 1;
        return a;
      }
      const Mat4 out = hermitian_part(blk / p);
      if (!want) {
        a.concurrence = concurrence(out);
        return a;
      }
      const auto cg = concurrence_with_gradient(out);
      a.concurrence = cg.value;
      if (cg.value <= 0.0) return a;
      // d C = Tr(G_u d blk) with G_u = (G - Tr(G out) I) / p.
      const Mat4 gu = (cg.grad - (cg.grad * out).trace() * Mat4::Identity()) / p;
      // d C = 2 Re Tr(Z dV), Z columns 4i + k hold (pair V_k^dag G_u)(:, i).
      const Eigen::Matrix<cplx, 16, 4> zk = pv * gu;
      for (int i = 0; i < 4; ++i) a.z.col(4 * i + k) = zk.col(i);
      return a;
    });
    degenerate_ = acc.degenerate;
    const double n = static_cast<double>(sample_.size());
    const double cost = 1.0 - acc.concurrence / n;

    if (want) {
      // Split Z onto the two nodes: Tr(Z dV) = Tr(Z_A dU_A) + Tr(Z_B dU_B).
      Mat4 za = Mat4::Zero(), zb = Mat4::Zero();
      for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
          const cplx zcr = acc.z(c, r);
          if (zcr == cplx{}) continue;
          za(detail::node_a_index(c), detail::node_a_index(r)) +=
              zcr * ub(detail::node_b_index(r), detail::node_b_index(c));
          zb(detail::node_b_index(c), detail::node_b_index(r)) +=
              zcr * ua(detail::node_a_index(r), detail::node_a_index(c));
        }
      const auto aa = angles.a(), ab = angles.b();
      const auto da = su4_derivatives(aa.data());
      const auto db = su4_derivatives(ab.data());
      for (int m = 0; m < 15; ++m) {
        (*grad)[m] = -2.0 * (za * da[m]).trace().real() / n;
        (*grad)[15 + m] = -2.0 * (zb * db[m]).trace().real() / n;
      }
    }
    return cost;
  }

 private:
  std::vector<Mat4> sample_;
  MeasurementPolicy policy_;
  std::vector<int> outcome_;  // 0-based
  int degenerate_ = 0;
};

inline std::vector<Mat4> matrices(const std::vector<DensityMatrix>& states) {
  std::vector<Mat4> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.matrix());
  return out;
}

/// f = 1 - (1/N) sum C[rho_out]. Degenerate outputs contribute C = 0.
inline double cost(const EulerAngles& angles, const std::vector<DensityMatrix>& sample,
                   const MeasurementPolicy& policy) {
  VariationalObjective obj(matrices(sample), policy);
  obj.select(angles);
  return obj.evaluate(angles);
}

inline std::array<double, 30> gradient(const EulerAngles& angles,
                                       const std::vector<DensityMatrix>& sample,
                                       const MeasurementPolicy& policy) {
  VariationalObjective obj(matrices(sample), policy);
  obj.select(angles);
  std::array<double, 30> g{};
  obj.evaluate(angles, &g);
  return g;
}

// Optimization -----------------------------------------------------------------

struct OptimizerConfig {
  int max_iterations = 200;  // 0 evaluates the starting point only
  double gradient_tolerance = 1e-6;
  int history_size = 10;
  int restarts = 20;  // the cost has many local minima; a handful of starts misses most
  std::size_t subset_size = 1000;
  std::uint64_t seed = 0;  // restart points

  void validate() const {
    if (max_iterations < 0) throw std::invalid_argument("optimizer: max_iterations must be >= 0");
    if (!(gradient_tolerance > 0.0))
      throw std::invalid_argument("optimizer: gradient_tolerance must be positive");
    if (history_size < 1) throw std::invalid_argument("optimizer: history_size must be >= 1");
    if (restarts < 1) throw std::invalid_argument("optimizer: restarts must be >= 1");
    if (subset_size < 1) throw std::invalid_argument("optimizer: subset_size must be >= 1");
  }
};

struct OptimizeResult {
  EulerAngles angles;
  double cost = 1.0;
  double initial_cost = 1.0;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  int degenerate = 0;
  std::string message;
};

inline EulerAngles random_angles(Rng& rng) {
  EulerAngles e;
  for (int i = 0; i < 30; ++i) e.alpha[i] = rng.uniform(0.0, EulerAngles::upper(i));
  return e;
}

/// Angles near the identity corner: each alpha_i uniform on [0, width].
inline EulerAngles near_identity_angles(Rng& rng, double width = 0.1) {
  EulerAngles e;
  for (int i = 0; i < 30; ++i) e.alpha[i] = rng.uniform(0.0, std::min(width, EulerAngles::upper(i)));
  return e;
}

/// Bounded quasi-Newton descent of the cost from `initial`, then from
/// cfg.restarts - 1 uniform random points; the best result (never worse than
/// `initial`) is returned.
inline OptimizeResult optimize(const std::vector<DensityMatrix>& sample,
                               const MeasurementPolicy& policy, const OptimizerConfig& cfg,
                               const EulerAngles& initial) {
  cfg.validate();
  if (!initial.in_bounds()) throw std::invalid_argument("optimize: initial angles out of bounds");
  VariationalObjective obj(matrices(sample), policy);

  auto true_cost = [&](const EulerAngles& a) {
    obj.select(a);
    return obj.evaluate(a);
  };

  OptimizeResult best;
  best.angles = initial;
  best.cost = best.initial_cost = true_cost(initial);
  best.degenerate = obj.degenerate();
  best.message = "starting point";
  if (cfg.max_iterations == 0) return best;

  LbfgsbOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.history = cfg.history_size;
  opt.pgtol = cfg.gradient_tolerance;

  const ValueGrad fg = [&](const VecX& x, VecX& g) {
    std::array<double, 30> ga{};
    const double f = obj.evaluate(EulerAngles::from_vector(x), &ga);
    g = Eigen::Map<VecX>(ga.data(), 30);
    return f;
  };
  OnAccept reselect = nullptr;
  if (policy.is_greedy())
    reselect = [&](const VecX& x, double& f, VecX& g) {
      const auto a = EulerAngles::from_vector(x);
      obj.select(a);
      std::array<double, 30> ga{};
      f = obj.evaluate(a, &ga);
      g = Eigen::Map<VecX>(ga.data(), 30);
    };

  Rng rng(cfg.seed);
  for (int r = 0; r < cfg.restarts; ++r) {
    const EulerAngles start = r == 0 ? initial : random_angles(rng);
    if (policy.is_greedy()) obj.select(start);
    const auto res = lbfgsb_minimize(fg, start.to_vector(), EulerAngles::lower_bounds(),
                                     EulerAngles::upper_bounds(), opt, reselect);
    const auto found = EulerAngles::from_vector(res.x);
    const double c = true_cost(found);
    if (c < best.cost) {
      best.angles = found;
      best.cost = c;
      best.converged = res.converged;
      best.iterations = res.iterations;
      best.message = res.message;
      best.degenerate = obj.degenerate();
    }
    best.evaluations += res.evaluations;
  }
  return best;
}

// Adaptive multi-round protocol ------------------------------------------------------

struct RoundRecord {
  int round = 0;
  RoundPlan plan;
  double cost = 1.0;       // on the optimization subset; 1 - mean C for projector rounds
  bool optimized = false;
  bool converged = false;
  std::string message;
};

struct AdaptiveRun {
  std::vector<RoundRecord> rounds;
  /// Per-state values for rounds 0..R, [round][state]; row 0 is the input.
  std::vector<std::vector<double>> concurrence;
  std::vector<std::vector<double>> success;

  std::vector<IterationStats> stats() const {
    std::vector<IterationStats> out;
    for (int i = 0; i < static_cast<int>(concurrence.size()); ++i)
      out.push_back(make_iteration_stats(i, concurrence[i], success[i]));
    return out;
  }
};

struct AdaptiveOptions {
  int rounds = 1;
  MeasurementPolicy policy;
  bool projector_first = false;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;  // subset selection and starting points
};

namespace detail {

/// Applies one round to every live state. Frozen states (C = 0, or a
/// degenerate step) stay frozen with C = 0 and success 0.
inline void apply_round(std::vector<DensityMatrix>& states, std::vector<char>& live,
                        const RoundPlan& plan, std::vector<double>& conc,
                        std::vector<double>& success) {
  const Mat16 op = plan.operation();
  parallel_for(states.size(), [&](std::size_t j) {
    conc[j] = success[j] = 0.0;
    if (!live[j]) return;
    try {
      const auto b = measure_branches(states[j].matrix(), op);
      const int k = select_outcome(plan.policy, b);
      if (k < 0 || !(b.concurrence[k] > 0.0)) {
        live[j] = 0;
        return;
      }
      states[j] = DensityMatrix::trusted(b.state[k]);
      conc[j] = b.concurrence[k];
      success[j] = b.probability[k] * b.acceptance;
    } catch (const DegenerateInput&) {
      live[j] = 0;
    }
  });
}

inline void start_run(AdaptiveRun& run, const std::vector<DensityMatrix>& states,
                      std::vector<char>& live) {
  const std::size_t n = states.size();
  run.concurrence.assign(1, std::vector<double>(n, 0.0));
  run.success.assign(1, std::vector<double>(n, 0.0));
  live.assign(n, 0);
  parallel_for(n, [&](std::size_t j) {
    run.concurrence[0][j] = concurrence(states[j]);
    live[j] = run.concurrence[0][j] > 0.0;
  });
}

}  // namespace detail

/// Each round optimizes the angles on a random subset of the live states,
/// then replaces every state by its output. With projector_first, round 1
/// applies the special projector instead.
inline AdaptiveRun run_adaptive_protocol(std::vector<DensityMatrix> states,
                                         const AdaptiveOptions& opt) {
  if (opt.rounds < 1) throw std::invalid_argument("adaptive protocol: rounds must be >= 1");
  opt.optimizer.validate();
  AdaptiveRun run;
  std::vector<char> live;
  detail::start_run(run, states, live);
  Rng rng(opt.seed);
  const std::size_t n = states.size();

  for (int r = 1; r <= opt.rounds; ++r) {
    RoundRecord rec;
    rec.round = r;
    if (r == 1 && opt.projector_first) {
      rec.plan = RoundPlan::projector(opt.policy);
      rec.message = "special projector";
    } else {
      std::vector<std::size_t> pool;
      for (std::size_t j = 0; j < n; ++j)
        if (live[j]) pool.push_back(j);
      const std::size_t take = std::min(opt.optimizer.subset_size, pool.size());
      for (std::size_t i = 0; i < take; ++i)
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      std::vector<DensityMatrix> subset;
      subset.reserve(take);
      for (std::size_t i = 0; i < take; ++i) subset.push_back(states[pool[i]]);

      OptimizerConfig cfg = opt.optimizer;
      cfg.seed = rng.next_u64();
      const EulerAngles start = near_identity_angles(rng);
      if (subset.empty()) {
        rec.plan = RoundPlan::unitary(start, opt.policy);
        rec.message = "no live states";
      } else {
        const auto res = optimize(subset, opt.policy, cfg, start);
        rec.plan = RoundPlan::unitary(res.angles, opt.policy);
        rec.cost = res.cost;
        rec.optimized = true;
        rec.converged = res.converged;
        rec.message = res.message;
      }
    }
    std::vector<double> conc(n), success(n);
    detail::apply_round(states, live, rec.plan, conc, success);
    if (!rec.optimized) rec.cost = 1.0 - pairwise_sum(conc, 0.0) / static_cast<double>(n);
    run.concurrence.push_back(std::move(conc));
    run.success.push_back(std::move(success));
    run.rounds.push_back(std::move(rec));
  }
  return run;
}

/// Applies a fixed list of round plans (for example, angles loaded from a
/// previous optimization).
inline AdaptiveRun replay_protocol(std::vector<DensityMatrix> states,
                                   const std::vector<RoundPlan>& plans) {
  AdaptiveRun run;
  std::vector<char> live;
  detail::start_run(run, states, live);
  const std::size_t n = states.size();
  int r = 0;
  for (const auto& plan : plans) {
    std::vector<double> conc(n), success(n);
    detail::apply_round(states, live, plan, conc, success);
    RoundRecord rec;
    rec.round = ++r;
    rec.plan = plan;
    rec.cost = 1.0 - pairwise_sum(conc, 0.0) / static_cast<double>(n);
    run.concurrence.push_back(std::move(conc));
    run.success.push_back(std::move(success));
    run.rounds.push_back(std::move(rec));
  }
  return run;
}

}  // namespace purikit
