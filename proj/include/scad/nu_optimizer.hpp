#pragma once

// Minimisation of the post-CAD entropy expression over the phase-flip
// weights nu_Delta.
//
// Variables are u_Delta = (Q_Delta - 2 nu_Delta) / Q_Delta, one per pattern
// with Q_Delta > 0, so that tau = (1 - |u_x u_z|) / 2 and the constraint
// sum nu = Q_X becomes sum Q_Delta u_Delta = 1 - 2 Q_X. The objective only
// depends on |u| and never decreases when some |u_Delta| grows, so for
// 1 - 2 Q_X >= 0 an optimum always exists with u in [0,1]^n (scale |u|
// down onto the hyperplane); Q_X > 1/2 is the mirror image u -> -u. The
// search therefore runs on the box [0,1]^n where the objective is smooth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "scad/acceptance.hpp"
#include "scad/core_math.hpp"
#include "scad/noise_model.hpp"

namespace scad {

struct NuOptimizerOptions {
  int starts = 16;
  int max_iterations = 4000;
  /// Per-iteration objective decrease below which a descent is considered
  /// stalled; two stalled iterations in a row end it.
  double objective_tolerance = 1e-10;
  std::uint64_t seed = 0x5CAD'0001'D15E'EDULL;
};

/// The minimisation problem for one (distribution, mask) pair.
class NuProblem {
 public:
  struct Term {
    std::uint32_t a;
    std::uint32_t b;
    double weight;  // Q_x Q_z, doubled for x != z since (x,z) and (z,x) coincide
  };

  NuProblem(const ErrorDistribution& d, const CadMask& mask) : p_(d.parties()), qx_(d.qx()) {
    check_mask(d, mask);
    var_of_pattern_.assign(d.size(), -1);
    for (std::uint32_t v = 0; v < d.size(); ++v) {
      if (d.at(v) > 0.0) {
        var_of_pattern_[v] = static_cast<std::int32_t>(pattern_.size());
        pattern_.push_back(v);
        q_.push_back(d.at(v));
      }
    }
    const std::uint32_t free_bits = ~mask.value() & BitPattern::full_mask(p_);
    for (std::uint32_t a = 0; a < pattern_.size(); ++a) {
      const std::uint32_t x = pattern_[a];
      for (std::uint32_t t = free_bits;; t = (t - 1) & free_bits) {
        const std::int32_t b = var_of_pattern_[x ^ t];
        if (b >= static_cast<std::int32_t>(a)) {
          const auto ub = static_cast<std::uint32_t>(b);
          const double w = q_[a] * q_[ub] * (ub == a ? 1.0 : 2.0);
          terms_.push_back({a, ub, w});
          p_accept_ += w;
        }
        if (t == 0) break;
      }
    }
    if (p_accept_ <= 0.0) throw DegenerateAcceptance();
    curvature_scale_.assign(q_.size(), 0.0);
    for (const Term& t : terms_) {
      curvature_scale_[t.a] += t.weight / p_accept_;
      if (t.b != t.a) curvature_scale_[t.b] += t.weight / p_accept_;
    }
    target_ = std::abs(1.0 - 2.0 * qx_);
    target_ = std::min(target_, std::accumulate(q_.begin(), q_.end(), 0.0));
  }

  std::size_t dimension() const { return q_.size(); }
  std::span<const double> weights() const { return q_; }
  double target() const { return target_; }
  double acceptance() const { return p_accept_; }
  /// Sum of the term weights touching each variable, over p_a: the size of
  /// its Hessian diagonal away from u = 0 and u = 1.
  std::span<const double> curvature_scale() const { return curvature_scale_; }

  /// G(u) = 1 - (1/p_a) sum w h((1 - u_a u_b)/2). Fills the gradient and
  /// the Hessian diagonal when the spans are non-empty.
  double evaluate(std::span<const double> u, std::span<double> grad, std::span<double> hess_diag = {}) const {
    const bool want_grad = !grad.empty();
    const bool want_hess = !hess_diag.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    if (want_hess) std::fill(hess_diag.begin(), hess_diag.end(), 0.0);
    double f = 0.0;
    for (const Term& t : terms_) {
      const double ua = u[t.a];
      const double ub = u[t.b];
      const double s = std::max(0.5 * (1.0 - ua * ub), kTinyTau);
      const double ls = std::log2(s);
      const double lc = std::log2(1.0 - s);
      f += t.weight * (-s * ls - (1.0 - s) * lc);
      if (want_grad) {
        // h'(s) = log2((1-s)/s), ds/du_a = -u_b/2.
        const double c = t.weight * (lc - ls) * 0.5 / p_accept_;
        grad[t.a] += c * ub;
        grad[t.b] += c * ua;
      }
      if (want_hess) {
        // -h''(s) = 1/(ln 2 s(1-s)); s is floored so the curvature stays finite at u = 1.
        const double sh = std::max(s, kCurvatureFloorTau);
        const double curv = t.weight / (std::numbers::ln2 * sh * (1.0 - sh)) / p_accept_;
        if (t.a == t.b) {
          hess_diag[t.a] += curv * ua * ua + t.weight * (lc - ls) / p_accept_;
        } else {
          hess_diag[t.a] += 0.25 * curv * ub * ub;
          hess_diag[t.b] += 0.25 * curv * ua * ua;
        }
      }
    }
    return 1.0 - f / p_accept_;
  }

  /// Projection onto {0 <= u <= 1, sum q u = target} in the metric diag(m):
  /// u = clip(y - theta q / m) for the scalar theta that meets the target.
  std::vector<double> project(std::span<const double> y, std::span<const double> metric = {}) const {
    const std::size_t n = y.size();
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = metric.empty() ? 1.0 : q_[i] / metric[i];
    auto mass = [&](double theta) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += q_[i] * std::clamp(y[i] - theta * k[i], 0.0, 1.0);
      return m;
    };
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, (y[i] - 1.0) / k[i]);  // below lo everything clips to 1
      hi = std::max(hi, y[i] / k[i]);          // above hi everything clips to 0
    }
    for (int it = 0; it < 200 && lo < hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (mass(mid) >= target_ ? lo : hi) = mid;
    }
    const double theta = std::abs(mass(lo) - target_) <= std::abs(mass(hi) - target_) ? lo : hi;
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = std::clamp(y[i] - theta * k[i], 0.0, 1.0);
    return u;
  }

  /// Dense nu over all 2^p patterns for a search point u.
  std::vector<double> to_nu(std::span<const double> u) const {
    std::vector<double> nu(var_of_pattern_.size(), 0.0);
    const double sign = qx_ > 0.5 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) nu[pattern_[i]] = 0.5 * q_[i] * (1.0 - sign * u[i]);
    return nu;
  }

  /// Greedy vertex: saturate variables at 1 in the given order until the
  /// budget is spent.
  std::vector<double> vertex(std::span<const std::size_t> order) const {
    std::vector<double> u(q_.size(), 0.0);
    double budget = target_;
    for (std::size_t i : order) {
      if (budget <= 0.0) break;
      u[i] = std::min(1.0, budget / q_[i]);
      budget -= u[i] * q_[i];
    }
    return u;
  }

 private:
  static constexpr double kTinyTau = 1e-300;
  static constexpr double kCurvatureFloorTau = 1e-12;

  int p_;
  double qx_;
  double target_ = 0.0;
  double p_accept_ = 0.0;
  std::vector<std::int32_t> var_of_pattern_;
  std::vector<std::uint32_t> pattern_;
  std::vector<double> q_;
  std::vector<Term> terms_;
  std::vector<double> curvature_scale_;
};

struct NuSearchResult {
  double value = 1.0;
  std::vector<double> nu;  // dense over all patterns
  int best_start = -1;
  int total_iterations = 0;
};

namespace detail {

struct DescentResult {
  std::vector<double> u;
  double value;
  int iterations;
};

/// Projected descent in the metric given by the (floored) Hessian
/// diagonal, with Armijo backtracking along the projection arc.
inline DescentResult projected_descent(const NuProblem& prob, std::vector<double> u, const NuOptimizerOptions& opt) {
  const std::size_t n = prob.dimension();
  std::vector<double> g(n), d(n), gn(n), dn(n), y(n);
  double value = prob.evaluate(u, g, d);
  int stalled = 0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    // The true curvature vanishes at u = 0; keep a per-variable floor.
    const auto scale = prob.curvature_scale();
    for (std::size_t i = 0; i < n; ++i) d[i] = std::max(d[i], 1e-6 * scale[i]);

    std::vector<double> un;
    double vn = 0.0;
    bool moved = false;
    for (double alpha = 1.0; alpha > 1e-20; alpha *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) y[i] = u[i] - alpha * g[i] / d[i];
      un = prob.project(y, d);
      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += g[i] * (un[i] - u[i]);
      if (!(slope < 0.0)) break;  // stationary
      vn = prob.evaluate(un, gn, dn);
      if (vn <= value + 1e-4 * slope) {
        moved = true;
        break;
      }
    }
    if (!moved) break;
    const double decrease = value - vn;
    u.swap(un);
    g.swap(gn);
    d.swap(dn);
    value = vn;
    stalled = decrease < opt.objective_tolerance ? stalled + 1 : 0;
    if (stalled >= 2) break;
  }
  return {std::move(u), value, it};
}

}  // namespace detail

/// Multi-start minimisation: centroid, greedy vertices (sorted and shuffled
/// orders) and uniformly random points, each refined by projected descent.
inline NuSearchResult minimize_nu(const NuProblem& prob, const NuOptimizerOptions& opt = {}) {
  const std::size_t n = prob.dimension();
  const auto q = prob.weights();
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> starts;
  starts.emplace_back(n, prob.target());  // nu proportional to Q

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return q[a] < q[b]; });
  starts.push_back(prob.vertex(order));
  std::reverse(order.begin(), order.end());
  starts.push_back(prob.vertex(order));
  const int total = std::max(opt.starts, 1);
  const int shuffled_vertices = std::max(0, std::min(5, total - 3));
  for (int k = 0; k < shuffled_vertices; ++k) {
    std::shuffle(order.begin(), order.end(), rng);
    starts.push_back(prob.vertex(order));
  }
  while (static_cast<int>(starts.size()) < total) {
    std::vector<double> y(n);
    for (double& v : y) v = unit(rng);
    starts.push_back(prob.project(y));
  }
  starts.resize(static_cast<std::size_t>(total));

  // Pull every start slightly into the interior; at u = 1 the slope of h is
  // unbounded and a descent started exactly there cannot leave.
  for (auto& st : starts)
    for (double& v : st) v = 0.98 * v + 0.02 * prob.target();

  NuSearchResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<double> best_u;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    auto r = detail::projected_descent(prob, prob.project(starts[k]), opt);
    best.total_iterations += r.iterations;
    if (r.value < best.value) {
      best.value = r.value;
      best.best_start = static_cast<int>(k);
      best_u = std::move(r.u);
    }
  }
  best.nu = prob.to_nu(best_u);
  return best;
}

}  // namespace scad
