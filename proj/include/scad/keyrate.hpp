#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scad/acceptance.hpp"
#include "scad/core_math.hpp"
#include "scad/noise_model.hpp"
#include "scad/nu_optimizer.hpp"

namespace scad {

/// Phase-flip weight per error pattern, indexed by BitPattern::value().
struct NuVector {
  std::vector<double> nu;

  double operator[](BitPattern d) const { return nu.at(d.value()); }
  double sum() const {
    double s = 0.0;
    for (double v : nu) s += v;
    return s;
  }
};

struct KeyRateReport {
  CadMask mask;
  double p_accept = 1.0;
  double entropy_bound = 1.0;
  std::vector<double> post_cad_errors;
  double leak_ec = 0.0;
  double rate = 0.0;  // raw; may be negative
  NuVector minimizer;
  double baseline_rate = 0.0;
};

inline constexpr double kNuFeasibilityTolerance = 1e-8;

/// tau = (1/2)(1 - |(q_x - 2 nu_x)(q_z - 2 nu_z)| / (q_x q_z)).
inline double tau(double q_x, double q_z, double nu_x, double nu_z) {
  if (!(q_x > 0.0 && q_z > 0.0)) throw std::invalid_argument("tau: error probabilities must be positive");
  const double t = 0.5 * (1.0 - std::abs((q_x - 2.0 * nu_x) * (q_z - 2.0 * nu_z)) / (q_x * q_z));
  return std::clamp(t, 0.0, 0.5);
}

inline void check_nu_feasible(const ErrorDistribution& d, const NuVector& nu) {
  if (nu.nu.size() != d.size()) throw std::invalid_argument("NuVector: size does not match distribution");
  for (std::uint32_t v = 0; v < d.size(); ++v) {
    const double n = nu.nu[v];
    if (n < -kNuFeasibilityTolerance || n > d.at(v) + kNuFeasibilityTolerance)
      throw std::invalid_argument("NuVector: nu_" + BitPattern(v, d.parties()).to_string() + " = " + std::to_string(n) + " outside [0, Q]");
  }
  if (std::abs(nu.sum() - d.qx()) > kNuFeasibilityTolerance)
    throw std::invalid_argument("NuVector: weights sum to " + std::to_string(nu.sum()) + ", expected qx = " + std::to_string(d.qx()));
}

/// 1 - (1/p_a) sum over accepted (x,z) of Q_x Q_z h(tau_{x,z}), in [0,1].
inline double entropy_objective(const ErrorDistribution& d, const CadMask& mask, const NuVector& nu) {
  check_mask(d, mask);
  check_nu_feasible(d, nu);
  const double pa = p_accept(d, mask);
  double sum = 0.0;
  for (const auto& [x, z] : acceptance_set(mask)) {
    const double qx = d[x];
    const double qz = d[z];
    if (qx == 0.0 || qz == 0.0) continue;
    sum += qx * qz * binary_entropy(tau(qx, qz, std::clamp(nu[x], 0.0, qx), std::clamp(nu[z], 0.0, qz)));
  }
  return std::clamp(1.0 - sum / pa, 0.0, 1.0);
}

struct EntropyBound {
  double value = 1.0;
  NuVector minimizer;
};

/// Minimum of entropy_objective over {0 <= nu <= Q, sum nu = Q_X}.
inline EntropyBound entropy_bound(const ErrorDistribution& d, const CadMask& mask, const NuOptimizerOptions& opt = {}) {
  check_mask(d, mask);
  const NuProblem problem(d, mask);
  const NuSearchResult search = minimize_nu(problem, opt);
  EntropyBound out;
  out.minimizer.nu = search.nu;
  out.value = entropy_objective(d, mask, out.minimizer);
  return out;
}

/// Post-CAD error rate used for the leakage term. For a CAD-enabled Bob this
/// is Q_AB_j^2 / p_a, capped at 1/2: the true conditional error never exceeds
/// Q_AB_j^2 / p_a, so h of the capped value always bounds the real leakage.
inline double post_cad_error(const ErrorDistribution& d, const CadMask& mask, int j) {
  check_mask(d, mask);
  const double q = marginal_link_error(d, j);
  if (!mask.enabled(j)) return q;
  return std::min(q * q / p_accept(d, mask), 0.5);
}

/// Exact probability that Bob_j's kept (Left) bit is wrong given acceptance:
/// the quantity a faithful run of the protocol would observe.
inline double conditional_post_cad_error(const ErrorDistribution& d, const CadMask& mask, int j) {
  check_mask(d, mask);
  const int p = d.parties();
  if (j < 1 || j > p) throw std::out_of_range("conditional_post_cad_error: Bob index out of range");
  const std::uint32_t bit = std::uint32_t{1} << (p - j);
  double wrong = 0.0;
  for (const auto& [x, z] : acceptance_set(mask))
    if (x.value() & bit) wrong += d[x] * d[z];
  return wrong / p_accept(d, mask);
}

/// Error-correction leakage: max_j h(Q_j).
inline double leak_ec(std::span<const double> post_errors) {
  if (post_errors.empty()) throw std::invalid_argument("leak_ec: no error rates given");
  double worst = 0.0;
  for (double q : post_errors) worst = std::max(worst, binary_entropy(q));
  return worst;
}

/// Rate of the protocol without advantage distillation: 1 - h(Q_X) - max_j h(Q_AB_j).
inline double no_cad_rate(const ErrorDistribution& d) {
  const auto marginals = marginal_link_errors(d);
  return 1.0 - binary_entropy(d.qx()) - leak_ec(marginals);
}

/// Report for the all-zero mask. Here no rounds are paired, so
/// rate = entropy_bound - leak_ec with entropy_bound = 1 - h(Q_X).
inline KeyRateReport no_cad_report(const ErrorDistribution& d) {
  KeyRateReport r{.mask = CadMask::none(d.parties())};
  r.p_accept = 1.0;
  r.entropy_bound = 1.0 - binary_entropy(d.qx());
  r.post_cad_errors = marginal_link_errors(d);
  r.leak_ec = leak_ec(r.post_cad_errors);
  r.rate = no_cad_rate(d);
  r.baseline_rate = r.rate;
  return r;
}

/// Asymptotic rate per transmitted GHZ state for a non-zero mask:
/// (p_a / 2)(H(A|EM) - leak_EC).
inline KeyRateReport key_rate(const ErrorDistribution& d, const CadMask& mask, const NuOptimizerOptions& opt = {}) {
  check_mask(d, mask);
  if (mask.is_none()) throw std::invalid_argument("key_rate: mask must enable CAD for at least one Bob; use no_cad_rate");
  KeyRateReport r{.mask = mask};
  r.p_accept = p_accept(d, mask);
  auto bound = entropy_bound(d, mask, opt);
  r.entropy_bound = bound.value;
  r.minimizer = std::move(bound.minimizer);
  for (int j = 1; j <= d.parties(); ++j) r.post_cad_errors.push_back(post_cad_error(d, mask, j));
  r.leak_ec = leak_ec(r.post_cad_errors);
  r.rate = 0.5 * r.p_accept * (r.entropy_bound - r.leak_ec);
  r.baseline_rate = no_cad_rate(d);
  return r;
}

inline KeyRateReport key_rate(const NoiseScenario& s, const CadMask& mask, const NuOptimizerOptions& opt = {}) {
  return key_rate(distribution_from_scenario(s), mask, opt);
}

/// Report for any mask, routing the all-zero mask to the no-CAD protocol.
inline KeyRateReport evaluate_mask(const ErrorDistribution& d, const CadMask& mask, const NuOptimizerOptions& opt = {}) {
  return mask.is_none() ? no_cad_report(d) : key_rate(d, mask, opt);
}

/// Rates closer than this are treated as ties in best_mask.
inline constexpr double kRateTieTolerance = 1e-9;

/// Picks the mask with the highest usable rate max(0, rate) out of
/// `reports`; ties go to fewer CAD parties, then to the lower numeric mask.
/// A negative rate yields no key, so it never beats another negative one.
inline const KeyRateReport& pick_best(std::span<const KeyRateReport> reports) {
  if (reports.empty()) throw std::invalid_argument("pick_best: no candidates");
  double top = -std::numeric_limits<double>::infinity();
  auto usable = [](const KeyRateReport& r) { return std::max(0.0, r.rate); };
  for (const auto& r : reports) top = std::max(top, usable(r));
  const KeyRateReport* best = nullptr;
  for (const auto& r : reports) {
    if (usable(r) < top - kRateTieTolerance) continue;
    if (!best || r.mask.count() < best->mask.count() ||
        (r.mask.count() == best->mask.count() && r.mask.value() < best->mask.value()))
      best = &r;
  }
  return *best;
}

/// Exhaustive search over all 2^p masks.
inline std::pair<CadMask, KeyRateReport> best_mask(const ErrorDistribution& d, const NuOptimizerOptions& opt = {}) {
  std::vector<KeyRateReport> reports;
  for (BitPattern m : enumerate_patterns(d.parties())) reports.push_back(evaluate_mask(d, CadMask(m), opt));
  const KeyRateReport& best = pick_best(reports);
  return {best.mask, best};
}

}  // namespace scad
