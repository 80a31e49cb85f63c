// SPDX-License-Identifier: Apache-2.0
#pragma once

// Limited-memory BFGS with box constraints: compact L-BFGS matrix,
// generalized Cauchy point along the projected gradient path, direct primal
// subspace minimization over the free variables, and a backtracking Armijo
// search along the resulting feasible direction.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace purikit {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

struct LbfgsbOptions {
  int max_iterations = 200;
  int history = 10;
  double pgtol = 1e-6;     // stop when ||P(x - g) - x||_inf <= pgtol
  double factr = 1e7;      // stop when relative f decrease <= factr * eps
  int max_backtracks = 30;
  double armijo = 1e-4;
};

struct LbfgsbResult {
  VecX x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// f(x, g) returns the value and writes the gradient.
using ValueGrad = std::function<double(const VecX&, VecX&)>;
/// Called with each accepted iterate; may overwrite f and g (used when the
/// objective itself is re-linearized at accepted points).
using OnAccept = std::function<void(const VecX&, double&, VecX&)>;

namespace detail {

inline VecX project(const VecX& x, const VecX& lo, const VecX& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

inline double projected_gradient_norm(const VecX& x, const VecX& g, const VecX& lo,
                                      const VecX& hi) {
  return (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

/// Compact form B = theta I - W M W^T of the limited-memory matrix.
class CompactBfgs {
 public:
  explicit CompactBfgs(int m) : m_(m) {}

  int size() const { return static_cast<int>(s_.size()); }
  double theta() const { return theta_; }
  const MatX& W() const { return w_; }
  const MatX& M() const { return mm_; }

  /// Returns false (and stores nothing) when the curvature s^T y is not
  /// safely positive.
  bool push(const VecX& s, const VecX& y) {
    const double sy = s.dot(y);
    const double yy = y.squaredNorm();
    if (!(sy > std::numeric_limits<double>::epsilon() * yy)) return false;
    s_.push_back(s);
    y_.push_back(y);
    if (static_cast<int>(s_.size()) > m_) {
      s_.pop_front();
      y_.pop_front();
    }
    theta_ = yy / sy;
    rebuild();
    return true;
  }

  void reset() {
    s_.clear();
    y_.clear();
    theta_ = 1.0;
    w_.resize(0, 0);
    mm_.resize(0, 0);
  }

 private:
  void rebuild() {
    const int k = size();
    const auto n = s_.front().size();
    MatX s(n, k), y(n, k);
    for (int i = 0; i < k; ++i) {
      s.col(i) = s_[i];
      y.col(i) = y_[i];
    }
    w_.resize(n, 2 * k);
    w_ << y, theta_ * s;
    const MatX sy = s.transpose() * y;
    MatX l = MatX::Zero(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < i; ++j) l(i, j) = sy(i, j);
    MatX middle(2 * k, 2 * k);
    middle.topLeftCorner(k, k) = -MatX(sy.diagonal().asDiagonal());
    middle.topRightCorner(k, k) = l.transpose();
    middle.bottomLeftCorner(k, k) = l;
    middle.bottomRightCorner(k, k) = theta_ * (s.transpose() * s);
    mm_ = middle.fullPivLu().inverse();
  }

  int m_;
  std::deque<VecX> s_, y_;
  double theta_ = 1.0;
  MatX w_, mm_;
};

struct CauchyPoint {
  VecX x;
  VecX c;  // W^T (x_cp - x)
};

/// Piecewise search along x(t) = P(x - t g) for the first local minimizer
/// of the quadratic model.
inline CauchyPoint cauchy_point(const VecX& x, const VecX& g, const VecX& lo, const VecX& hi,
                                const CompactBfgs& b) {
  const auto n = x.size();
  const int k2 = 2 * b.size();
  const double theta = b.theta();
  const double inf = std::numeric_limits<double>::infinity();

  VecX t(n), d(n);
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    if (g(i) < 0.0)
      t(i) = (x(i) - hi(i)) / g(i);
    else if (g(i) > 0.0)
      t(i) = (x(i) - lo(i)) / g(i);
    else
      t(i) = inf;
    d(i) = t(i) > 0.0 ? -g(i) : 0.0;
    if (t(i) > 0.0 && t(i) < inf) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return t(a) < t(c); });

  CauchyPoint cp{x, VecX::Zero(k2)};
  VecX p = k2 > 0 ? VecX(b.W().transpose() * d) : VecX();
  double fp = -d.squaredNorm();
  double fpp = -theta * fp;
  if (k2 > 0) fpp -= p.dot(b.M() * p);
  if (fpp <= 0.0) fpp = std::numeric_limits<double>::epsilon();
  double dt_min = -fp / fpp;
  double t_old = 0.0;

  std::size_t next = 0;
  while (next < order.size()) {
    const int bi = order[next];
    const double tb = t(bi);
    const double dt = tb - t_old;
    if (dt_min < dt) break;
    // Variable bi hits its bound.
    const double xb = d(bi) > 0.0 ? hi(bi) : lo(bi);
    const double zb = xb - x(bi);
    cp.x(bi) = xb;
    const double gb = g(bi);
    if (k2 > 0) {
      cp.c += dt * p;
      const VecX wb = b.W().row(bi).transpose();
      const VecX mc = b.M() * cp.c;
      const VecX mp = b.M() * p;
      const VecX mw = b.M() * wb;
      fp += dt * fpp + gb * gb + theta * gb * zb - gb * wb.dot(mc);
      fpp += -theta * gb * gb - 2.0 * gb * wb.dot(mp) - gb * gb * wb.dot(mw);
      p += gb * wb;
    } else {
      fp += dt * fpp + gb * gb + theta * gb * zb;
      fpp += -theta * gb * gb;
    }
    d(bi) = 0.0;
    fpp = std::max(fpp, std::numeric_limits<double>::epsilon() * std::abs(fpp) + 1e-300);
    dt_min = -fp / fpp;
    t_old = tb;
    ++next;
    // Remaining breakpoints at the same t are handled on the next pass.
  }
  dt_min = std::max(dt_min, 0.0);
  const double t_final = t_old + dt_min;
  for (int i = 0; i < n; ++i)
    if (d(i) != 0.0) cp.x(i) = x(i) + t_final * d(i);
  if (k2 > 0) cp.c += dt_min * p;
  return cp;
}

/// Minimizes the quadratic model over the variables that are free at the
/// Cauchy point, then pulls the step back into the box.
inline VecX subspace_minimum(const VecX& x, const VecX& g, const VecX& lo, const VecX& hi,
                             const CompactBfgs& b, const CauchyPoint& cp) {
  const auto n = x.size();
  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (cp.x(i) > lo(i) && cp.x(i) < hi(i)) free.push_back(i);
  if (free.empty() || b.size() == 0) return cp.x;

  const double theta = b.theta();
  const int k2 = 2 * b.size();
  const auto nf = static_cast<int>(free.size());

  // Reduced gradient r = Z^T (g + theta (x_cp - x) - W M c).
  const VecX wmc = b.W() * (b.M() * cp.c);
  VecX r(nf);
  MatX wz(nf, k2);
  for (int j = 0; j < nf; ++j) {
    const int i = free[j];
    r(j) = g(i) + theta * (cp.x(i) - x(i)) - wmc(i);
    wz.row(j) = b.W().row(i);
  }
  // (theta I - Z^T W M W^T Z)^{-1} by Sherman-Morrison-Woodbury.
  const VecX v = b.M() * (wz.transpose() * r);
  const MatX n_mat = MatX::Identity(k2, k2) - (b.M() * (wz.transpose() * wz)) / theta;
  const VecX sol = n_mat.fullPivLu().solve(v);
  const VecX du = -r / theta - wz * sol / (theta * theta);

  // Largest alpha <= 1 keeping x_cp + alpha du feasible.
  double alpha = 1.0;
  for (int j = 0; j < nf; ++j) {
    const int i = free[j];
    if (du(j) > 0.0)
      alpha = std::min(alpha, (hi(i) - cp.x(i)) / du(j));
    else if (du(j) < 0.0)
      alpha = std::min(alpha, (lo(i) - cp.x(i)) / du(j));
  }
  VecX out = cp.x;
  for (int j = 0; j < nf; ++j) out(free[j]) += alpha * du(j);
  return project(out, lo, hi);
}

}  // namespace detail

/// Minimizes f over lo <= x <= hi. Accepted iterates never increase f.
inline LbfgsbResult lbfgsb_minimize(const ValueGrad& fg, VecX x, const VecX& lo, const VecX& hi,
                                    const LbfgsbOptions& opt = {},
                                    const OnAccept& on_accept = nullptr) {
  const auto n = x.size();
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("lbfgsb: bound size mismatch");
  if ((lo.array() > hi.array()).any()) throw std::invalid_argument("lbfgsb: lower > upper");
  if (opt.history < 1) throw std::invalid_argument("lbfgsb: history must be >= 1");

  LbfgsbResult res;
  x = detail::project(x, lo, hi);
  VecX g(n);
  double f = fg(x, g);
  ++res.evaluations;
  if (on_accept) on_accept(x, f, g);
  if (!std::isfinite(f)) throw std::runtime_error("lbfgsb: objective is not finite at the start");

  detail::CompactBfgs bfgs(opt.history);
  const double eps = std::numeric_limits<double>::epsilon();

  auto finish = [&](bool converged, std::string msg) {
    res.x = x;
    res.f = f;
    res.converged = converged;
    res.message = std::move(msg);
    return res;
  };

  if (detail::projected_gradient_norm(x, g, lo, hi) <= opt.pgtol)
    return finish(true, "projected gradient below tolerance");

  VecX g_new(n);
  for (res.iterations = 0; res.iterations < opt.max_iterations;) {
    // Search direction from the model; fall back to the projected gradient.
    const auto cp = detail::cauchy_point(x, g, lo, hi, bfgs);
    VecX target = detail::subspace_minimum(x, g, lo, hi, bfgs, cp);
    VecX dir = target - x;
    double slope = g.dot(dir);
    bool steepest = false;
    if (!(slope < 0.0)) {
      bfgs.reset();
      dir = detail::project(x - g, lo, hi) - x;
      slope = g.dot(dir);
      steepest = true;
      if (!(slope < 0.0)) return finish(true, "no descent direction");
    }

    // Backtracking Armijo along the feasible segment x + t dir, t <= 1.
    auto search = [&](const VecX& d, double s0, VecX& x_out, double& f_out) {
      double t = 1.0;
      if (bfgs.size() == 0 && !steepest) t = std::min(1.0, 1.0 / d.norm());
      for (int k = 0; k <= opt.max_backtracks; ++k, t *= 0.5) {
        x_out = detail::project(x + t * d, lo, hi);
        f_out = fg(x_out, g_new);
        ++res.evaluations;
        if (std::isfinite(f_out) && f_out <= f + opt.armijo * t * s0) return true;
      }
      return false;
    };

    VecX x_new;
    double f_new = 0.0;
    bool ok = search(dir, slope, x_new, f_new);
    if (!ok && !steepest) {
      // Projected steepest descent for this iteration.
      bfgs.reset();
      steepest = true;
      dir = detail::project(x - g, lo, hi) - x;
      slope = g.dot(dir);
      if (slope < 0.0) ok = search(dir, slope, x_new, f_new);
    }
    if (!ok) return finish(false, "line search failed to decrease the objective");

    ++res.iterations;
    const VecX s = x_new - x;
    const VecX y = g_new - g;
    const double f_old = f;
    x = x_new;
    f = f_new;
    g = g_new;
    bfgs.push(s, y);
    if (on_accept) on_accept(x, f, g);

    if (detail::projected_gradient_norm(x, g, lo, hi) <= opt.pgtol)
      return finish(true, "projected gradient below tolerance");
    if ((f_old - f) <= opt.factr * eps * std::max({std::abs(f_old), std::abs(f), 1.0}))
      return finish(true, "relative reduction of f below tolerance");
  }
  return finish(false, "iteration limit reached");
}

}  // namespace purikit
