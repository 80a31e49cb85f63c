// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "support.hpp"

using namespace purikit;
using namespace testing_support;

namespace {

Mat4 expm_hermitian(const Mat4& h, double alpha) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(h);
  Vec4 ph;
  for (int i = 0; i < 4; ++i) ph(i) = std::polar(1.0, alpha * es.eigenvalues()(i));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<DensityMatrix> mixed_sample(Gen& g, int n) {
  std::vector<DensityMatrix> out;
  for (int i = 0; i < n; ++i) {
    const Mat4 m = 0.5 * random_density<4>(g) + 0.5 * bell_projector(1 + i % 4);
    out.push_back(DensityMatrix::checked(m));
  }
  return out;
}

// Minimizes 1 - |Tr(U^dag T)|^2 / 16 over the box; returns (angles, misfit).
std::pair<std::array<double, 15>, double> fit_unitary(const Mat4& target, int restarts) {
  const ValueGrad fg = [&](const VecX& x, VecX& g) {
    std::array<double, 15> a;
    for (int m = 0; m < 15; ++m) a[m] = x(m);
    const Mat4 u = su4_unitary(a);
    const cplx z = (u.adjoint() * target).trace();
    const auto d = su4_derivatives(a.data());
    g.resize(15);
    for (int m = 0; m < 15; ++m)
      g(m) = -2.0 * (std::conj(z) * (d[m].adjoint() * target).trace()).real() / 16.0;
    return 1.0 - std::norm(z) / 16.0;
  };
  VecX lo = VecX::Zero(15), hi(15);
  for (int m = 0; m < 15; ++m) hi(m) = euler_upper_bound(m);
  LbfgsbOptions opt;
  opt.max_iterations = 2000;
  opt.pgtol = 1e-14;
  opt.factr = 1.0;
  Rng rng(2024);
  std::pair<std::array<double, 15>, double> best{{}, 2.0};
  for (int r = 0; r < restarts && best.second > 1e-14; ++r) {
    VecX x(15);
    for (int m = 0; m < 15; ++m) x(m) = rng.uniform(0.0, hi(m));
    const auto res = lbfgsb_minimize(fg, x, lo, hi, opt);
    if (res.f < best.second) {
      for (int m = 0; m < 15; ++m) best.first[m] = res.x(m);
      best.second = res.f;
    }
  }
  return best;
}

}  // namespace

TEST(GellMann, HermitianTracelessOrthogonal) {
  for (int i = 1; i <= 15; ++i) {
    const Mat4 a = gell_mann(i);
    EXPECT_TRUE(is_hermitian(a, 0.0));
    EXPECT_LT(std::abs(a.trace()), 1e-15);
    for (int j = 1; j <= 15; ++j)
      EXPECT_NEAR(std::abs((a * gell_mann(j)).trace() - (i == j ? 2.0 : 0.0)), 0.0, 1e-14);
  }
}

TEST(GellMann, ClosedFormExponential) {
  for (int i = 1; i <= 15; ++i)
    for (double a : {0.0, 0.3, 1.1, -2.0, 3.0})
      EXPECT_LT(max_abs_diff(gell_mann_exp(i, a), expm_hermitian(gell_mann(i), a)), 1e-13)
          << "generator " << i << " angle " << a;
}

TEST(SU4, SpecialUnitaryOnRandomAngles) {
  Gen g(61);
  for (int t = 0; t < 200; ++t) {
    const auto e = interior_angles(g, 0.0);
    const Mat4 u = su4_unitary(e.a());
    EXPECT_LT(max_abs_diff(Mat4(u * u.adjoint()), Mat4::Identity()), 1e-10);
    EXPECT_NEAR(std::abs(u.determinant() - 1.0), 0.0, 1e-9);
    // Composition stays special unitary.
    const Mat4 w = u * su4_unitary(e.b());
    EXPECT_NEAR(std::abs(w.determinant() - 1.0), 0.0, 1e-9);
  }
}

TEST(SU4, RejectsOutOfBoxAngles) {
  std::array<double, 15> a{};
  a[1] = std::numbers::pi / 2 + 1e-9;
  EXPECT_THROW(su4_unitary(a), std::invalid_argument);
  a[1] = -1e-9;
  EXPECT_THROW(su4_unitary(a), std::invalid_argument);
}

TEST(SU4, DerivativesMatchDifferences) {
  Gen g(62);
  const auto e = interior_angles(g);
  auto a = e.a();
  const auto d = su4_derivatives(a.data());
  for (int m = 0; m < 15; ++m) {
    auto p = a, q = a;
    p[m] += 1e-6;
    q[m] -= 1e-6;
    const Mat4 fd = (su4_unitary(p) - su4_unitary(q)) / 2e-6;
    EXPECT_LT(max_abs_diff(fd, d[m]), 1e-8);
  }
}

TEST(PairUnitary, IdentityAndStructure) {
  EXPECT_LT(max_abs_diff(pair_unitary(EulerAngles{}), Mat16::Identity()), 1e-15);
  Gen g(63);
  const auto e = interior_angles(g);
  const Mat16 v = pair_unitary(e);
  EXPECT_LT(max_abs_diff(Mat16(v * v.adjoint()), Mat16::Identity()), 1e-10);
  // Product states factor node by node: (a1 b1 a2 b2) -> U_A on (a1 a2), U_B on (b1 b2).
  const Mat4 ua = su4_unitary(e.a()), ub = su4_unitary(e.b());
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      const int ai = 2 * ((i >> 3) & 1) + ((i >> 1) & 1), bi = 2 * ((i >> 2) & 1) + (i & 1);
      const int aj = 2 * ((j >> 3) & 1) + ((j >> 1) & 1), bj = 2 * ((j >> 2) & 1) + (j & 1);
      ASSERT_LT(std::abs(v(i, j) - ua(ai, aj) * ub(bi, bj)), 1e-14);
    }
}

TEST(PairUnitary, CnotAnglesReproduceCnotStep) {
  // Bilateral CNOT fitted inside the box, then compared with the CNOT-based
  // step after the same fixed local pre-rotation (u1^dag on A, u1 on B).
  Mat4 cnot = Mat4::Zero();
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
  const auto [alpha, misfit] = fit_unitary(cnot, 40);
  ASSERT_LT(misfit, 1e-13);
  EulerAngles e;
  for (int m = 0; m < 15; ++m) e.alpha[m] = e.alpha[15 + m] = alpha[m];
  const auto plan = RoundPlan::unitary(e, MeasurementPolicy::fixed(4));

  const Mat2 u1 = local::u(1);
  const Mat4 pre = kron(Mat2(u1.adjoint()), u1);
  Gen g(64);
  for (int t = 0; t < 200; ++t) {
    std::array<double, 4> r;
    double s = 0.0;
    for (double& x : r) s += (x = g.uniform(0.01, 1.0));
    for (double& x : r) x /= s;
    const auto rho = bell_diagonal_state(r);
    const auto want = cnot_step(rho);
    const auto got = variational_step(DensityMatrix::checked(pre * rho.matrix() * pre.adjoint()), plan);
    EXPECT_NEAR(got.result.success_probability, want.success_probability, 1e-6);
    EXPECT_LT(max_abs_diff(got.result.state.matrix(), want.state.matrix()), 1e-6);
  }
}

TEST(VariationalStep, IdentityOnMaximallyMixed) {
  const auto s = variational_step(DensityMatrix::maximally_mixed(),
                                  RoundPlan::unitary(EulerAngles{}, MeasurementPolicy::fixed(1)));
  EXPECT_LT(max_abs_diff(s.result.state.matrix(), Mat4(Mat4::Identity() * 0.25)), 1e-15);
  EXPECT_NEAR(s.result.success_probability, 0.25, 1e-15);
  EXPECT_EQ(s.outcome, 1);
}

TEST(VariationalStep, ProjectorOnBell2) {
  // Pi built element by element from M2 on each node's (first, second) qubits.
  const Mat4 m2 = Mat4::Identity() - bell_projector(2);
  Mat16 pi;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      const int ai = 2 * ((i >> 3) & 1) + ((i >> 1) & 1), bi = 2 * ((i >> 2) & 1) + (i & 1);
      const int aj = 2 * ((j >> 3) & 1) + ((j >> 1) & 1), bj = 2 * ((j >> 2) & 1) + (j & 1);
      pi(i, j) = m2(ai, aj) * m2(bi, bj);
    }
  EXPECT_LT(max_abs_diff(pi, special_projector()), 1e-15);
  // |2>|2> has weight 1/4 on the node-wise |2>|2> product only.
  const auto st = variational_step(DensityMatrix::bell(2), RoundPlan::projector(MeasurementPolicy::greedy()));
  EXPECT_NEAR(st.acceptance, 0.75, 1e-14);
}

TEST(VariationalStep, VanishingOutcomeIsDegenerate) {
  Mat4 zz = Mat4::Zero();
  zz(0, 0) = 1.0;
  EXPECT_THROW(variational_step(DensityMatrix::checked(zz),
                                RoundPlan::unitary(EulerAngles{}, MeasurementPolicy::fixed(4))),
               DegenerateInput);
}

TEST(VariationalStep, ProjectorSuccessIncludesAcceptance) {
  Gen g(65);
  const auto rho = random_state(g);
  const Mat16 p = special_projector();
  const Mat16 s = p * kron(rho.matrix(), rho.matrix()) * p.adjoint();
  const double acc = s.trace().real();
  const auto st = variational_step(rho, RoundPlan::projector(MeasurementPolicy::fixed(3)));
  EXPECT_NEAR(st.acceptance, acc, 1e-14);
  EXPECT_NEAR(st.result.success_probability, second_pair_block(s, 2).trace().real(), 1e-14);
}

TEST(VariationalStep, GreedyPicksBestBranchLowestOnTies) {
  Gen g(66);
  for (int t = 0; t < 200; ++t) {
    const auto rho = random_state(g);
    const auto e = interior_angles(g);
    const Mat16 v = pair_unitary(e);
    const Mat16 s = v * kron(rho.matrix(), rho.matrix()) * v.adjoint();
    std::array<double, 4> c;
    for (int k = 0; k < 4; ++k) {
      const Mat4 blk = second_pair_block(s, k);
      c[k] = reference_concurrence(Mat4(blk / blk.trace().real()));
    }
    const auto st = variational_step(rho, RoundPlan::unitary(e, MeasurementPolicy::greedy()));
    const int best = static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
    EXPECT_NEAR(st.concurrence, c[best], 1e-9);
    for (int k = 1; k <= 4; ++k) {
      const auto f = variational_step(rho, RoundPlan::unitary(e, MeasurementPolicy::fixed(k)));
      EXPECT_GE(st.concurrence, f.concurrence);
    }
  }
  // Identity on I/4: all four branches tie at C = 0.
  const auto tie = variational_step(DensityMatrix::maximally_mixed(),
                                    RoundPlan::unitary(EulerAngles{}, MeasurementPolicy::greedy()));
  EXPECT_EQ(tie.outcome, 1);
}

TEST(Policy, ParseAndValidate) {
  EXPECT_TRUE(MeasurementPolicy::parse("greedy").is_greedy());
  EXPECT_EQ(MeasurementPolicy::parse("fixed:3").k, 3);
  EXPECT_EQ(MeasurementPolicy::parse("fixed:2").to_string(), "fixed:2");
  EXPECT_THROW(MeasurementPolicy::parse("fixed:5"), std::invalid_argument);
  EXPECT_THROW(MeasurementPolicy::parse("best"), std::invalid_argument);
  EXPECT_THROW(MeasurementPolicy::fixed(0), std::invalid_argument);
}

TEST(Cost, RangeAndSeparableInput) {
  Gen g(67);
  const auto sample = mixed_sample(g, 30);
  for (int t = 0; t < 20; ++t) {
    const auto e = interior_angles(g);
    const double c = cost(e, sample, MeasurementPolicy::greedy());
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
  Mat4 zz = Mat4::Zero();
  zz(0, 0) = 1.0;
  const std::vector<DensityMatrix> one{DensityMatrix::checked(zz), DensityMatrix::checked(zz)};
  EXPECT_EQ(cost(EulerAngles{}, one, MeasurementPolicy::fixed(1)), 1.0);
  const std::vector<DensityMatrix> bells{DensityMatrix::bell(1), DensityMatrix::bell(4)};
  const double cb = cost(EulerAngles{}, bells, MeasurementPolicy::fixed(1));
  EXPECT_GE(cb, 0.0);
  EXPECT_LE(cb, 1.0);
}

TEST(Cost, PermutationInvariant) {
  Gen g(68);
  auto sample = mixed_sample(g, 40);
  const auto e = interior_angles(g);
  const double a = cost(e, sample, MeasurementPolicy::greedy());
  std::reverse(sample.begin(), sample.end());
  EXPECT_NEAR(cost(e, sample, MeasurementPolicy::greedy()), a, 1e-15);
}

TEST(Cost, EmptySampleRejected) {
  EXPECT_THROW(cost(EulerAngles{}, {}, MeasurementPolicy::greedy()), std::invalid_argument);
}

TEST(Gradient, MatchesCentralDifferences) {
  Gen g(69);
  int probes = 0;
  for (int t = 0; t < 120; ++t) {
    const auto sample = matrices(mixed_sample(g, 20));
    const auto e = interior_angles(g);
    const auto policy = t % 2 ? MeasurementPolicy::greedy() : MeasurementPolicy::fixed(1 + t % 4);
    const double err = gradient_relative_error(e, sample, policy);
    EXPECT_LT(err, 1e-4) << "probe " << t;
    ++probes;
  }
  EXPECT_GE(probes, 100);
}

TEST(Gradient, ZeroOnConstantRegion) {
  Gen g(70);
  const std::vector<DensityMatrix> mixed(5, DensityMatrix::maximally_mixed());
  const auto gr = gradient(interior_angles(g), mixed, MeasurementPolicy::greedy());
  for (double x : gr) EXPECT_EQ(x, 0.0);
}

TEST(Lbfgsb, BoxedQuadratic) {
  // Minimum of sum w_i (x_i - c_i)^2 on [0, 1]^n is the clamp of c.
  const int n = 12;
  VecX w(n), c(n);
  for (int i = 0; i < n; ++i) {
    w(i) = 1.0 + i;
    c(i) = -0.5 + 0.17 * i;
  }
  const ValueGrad fg = [&](const VecX& x, VecX& g) {
    g = 2.0 * w.cwiseProduct(x - c);
    return w.dot((x - c).cwiseAbs2());
  };
  LbfgsbOptions opt;
  opt.pgtol = 1e-12;
  opt.factr = 1.0;
  const auto res = lbfgsb_minimize(fg, VecX::Constant(n, 0.5), VecX::Zero(n), VecX::Ones(n), opt);
  const VecX want = c.cwiseMax(0.0).cwiseMin(1.0);
  EXPECT_LT((res.x - want).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LT(res.iterations, 100);
  EXPECT_TRUE(res.converged);
}

TEST(Lbfgsb, IllConditionedRosenbrock) {
  const ValueGrad fg = [](const VecX& x, VecX& g) {
    g.resize(2);
    g(0) = -2.0 * (1.0 - x(0)) - 400.0 * x(0) * (x(1) - x(0) * x(0));
    g(1) = 200.0 * (x(1) - x(0) * x(0));
    return (1.0 - x(0)) * (1.0 - x(0)) + 100.0 * (x(1) - x(0) * x(0)) * (x(1) - x(0) * x(0));
  };
  LbfgsbOptions opt;
  opt.max_iterations = 500;
  opt.pgtol = 1e-10;
  opt.factr = 1.0;
  VecX x0(2);
  x0 << -1.2, 1.0;
  const auto res = lbfgsb_minimize(fg, x0, VecX::Constant(2, -2.0), VecX::Constant(2, 2.0), opt);
  EXPECT_NEAR(res.x(0), 1.0, 1e-6);
  EXPECT_NEAR(res.x(1), 1.0, 1e-6);
}

TEST(Optimize, DecreasesCostAndSatisfiesKkt) {
  Gen g(71);
  const auto sample = mixed_sample(g, 100);
  OptimizerConfig cfg;
  cfg.restarts = 3;
  cfg.max_iterations = 300;
  cfg.seed = 5;
  const auto pol = MeasurementPolicy::fixed(4);
  const auto res = optimize(sample, pol, cfg, EulerAngles{});
  EXPECT_LT(res.cost, cost(EulerAngles{}, sample, pol) - 1e-4);
  EXPECT_LE(res.cost, res.initial_cost + 1e-12);
  EXPECT_NEAR(res.cost, cost(res.angles, sample, pol), 1e-12);
  EXPECT_TRUE(res.angles.in_bounds());
  if (res.converged) {
    const auto gr = gradient(res.angles, sample, pol);
    for (int i = 0; i < 30; ++i) {
      if (res.angles.alpha[i] == 0.0) {
        EXPECT_GE(gr[i], -1e-5) << i;
      }
      if (res.angles.alpha[i] == EulerAngles::upper(i)) {
        EXPECT_LE(gr[i], 1e-5) << i;
      }
    }
  }
}

TEST(Optimize, OptimalStartIsKept) {
  // Identity, outcome 00 on |4> (x) |4> leaves |4>: cost already 0.
  const std::vector<DensityMatrix> s{DensityMatrix::bell(4), DensityMatrix::bell(4)};
  OptimizerConfig cfg;
  cfg.restarts = 1;
  const auto res = optimize(s, MeasurementPolicy::fixed(1), cfg, EulerAngles{});
  EXPECT_NEAR(res.cost, 0.0, 1e-12);
  EXPECT_LT(max_abs_diff(pair_unitary(res.angles), Mat16::Identity()), 1e-6);
}

TEST(Optimize, ZeroIterationsEvaluatesStart) {
  Gen g(72);
  const auto sample = mixed_sample(g, 10);
  OptimizerConfig cfg;
  cfg.max_iterations = 0;
  const auto e = interior_angles(g);
  const auto res = optimize(sample, MeasurementPolicy::greedy(), cfg, e);
  EXPECT_EQ(res.angles, e);
  EXPECT_EQ(res.cost, cost(e, sample, MeasurementPolicy::greedy()));
  cfg.max_iterations = -1;
  EXPECT_THROW(optimize(sample, MeasurementPolicy::greedy(), cfg, e), std::invalid_argument);
}

TEST(Adaptive, SingleUnoptimizedRoundMatchesPlainStep) {
  Gen g(73);
  const auto sample = mixed_sample(g, 50);
  AdaptiveOptions opt;
  opt.rounds = 1;
  opt.policy = MeasurementPolicy::fixed(1);
  opt.optimizer.max_iterations = 0;
  opt.optimizer.restarts = 1;
  opt.seed = 3;
  const auto run = run_adaptive_protocol(sample, opt);
  const auto& plan = run.rounds.at(0).plan;
  for (std::size_t j = 0; j < sample.size(); ++j) {
    const auto st = variational_step(sample[j], plan);
    if (st.concurrence > 0.0) {
      EXPECT_EQ(run.concurrence[1][j], st.concurrence);
      EXPECT_EQ(run.success[1][j], st.result.success_probability);
    } else {
      EXPECT_EQ(run.concurrence[1][j], 0.0);
    }
  }
  // The identity plan at alpha = 0 on the same states: plain measurement statistics.
  const auto id = replay_protocol(sample, {RoundPlan::unitary(EulerAngles{}, MeasurementPolicy::fixed(1))});
  for (std::size_t j = 0; j < sample.size(); ++j) {
    const auto st = variational_step(sample[j], RoundPlan::unitary(EulerAngles{}, MeasurementPolicy::fixed(1)));
    EXPECT_EQ(id.concurrence[1][j], st.concurrence);
  }
}

TEST(Adaptive, DeterministicAndThreadInvariant) {
  Gen g(74);
  const auto sample = mixed_sample(g, 300);
  AdaptiveOptions opt;
  opt.rounds = 3;
  opt.policy = MeasurementPolicy::greedy();
  opt.projector_first = true;
  opt.optimizer.subset_size = 60;
  opt.optimizer.restarts = 2;
  opt.optimizer.max_iterations = 40;
  opt.seed = 11;
  set_thread_count(1);
  const auto a = run_adaptive_protocol(sample, opt);
  set_thread_count(4);
  const auto b = run_adaptive_protocol(sample, opt);
  set_thread_count(0);
  EXPECT_EQ(a.concurrence, b.concurrence);
  EXPECT_EQ(a.success, b.success);
  ASSERT_EQ(a.rounds.size(), 3u);
  EXPECT_EQ(a.rounds[0].plan.op, RoundPlan::Op::SpecialProjector);
  EXPECT_FALSE(a.rounds[1].plan.angles == a.rounds[2].plan.angles);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(a.rounds[r].plan.angles, b.rounds[r].plan.angles);
  // Replaying the recorded plans reproduces the run.
  std::vector<RoundPlan> plans;
  for (const auto& rec : a.rounds) plans.push_back(rec.plan);
  EXPECT_EQ(replay_protocol(sample, plans).concurrence, a.concurrence);
}

TEST(Adaptive, RejectsZeroRounds) {
  AdaptiveOptions opt;
  opt.rounds = 0;
  EXPECT_THROW(run_adaptive_protocol({DensityMatrix::bell(1)}, opt), std::invalid_argument);
}
