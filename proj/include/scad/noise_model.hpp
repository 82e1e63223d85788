#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scad/core_math.hpp"

namespace scad {

/// Star network: Alice in the centre, one noisy link per Bob.
struct NoiseScenario {
  std::vector<double> link_noise;  // Q_AB_i for Bob_1..Bob_p
  double qx = 0.0;                 // phase error rate

  int parties() const { return static_cast<int>(link_noise.size()); }

  void validate() const {
    const int p = parties();
    if (p < 2 || p > kMaxParties) throw std::invalid_argument("NoiseScenario: need 2..16 Bobs, got " + std::to_string(p));
    for (int i = 0; i < p; ++i) {
      const double q = link_noise[static_cast<std::size_t>(i)];
      if (!(q >= 0.0 && q < 0.5))
        throw std::invalid_argument("NoiseScenario: link noise of Bob_" + std::to_string(i + 1) + " must lie in [0, 0.5), got " + std::to_string(q));
    }
    if (!(qx >= 0.0 && qx <= 0.5)) throw std::invalid_argument("NoiseScenario: qx must lie in [0, 0.5], got " + std::to_string(qx));
  }
};

/// Probability of every Bob error pattern relative to Alice, plus the phase
/// error rate. Stored densely, indexed by BitPattern::value().
class ErrorDistribution {
 public:
  static constexpr double kNormTolerance = 1e-10;

  ErrorDistribution(int p, std::vector<double> probs, double qx) : p_(p), probs_(std::move(probs)), qx_(qx) {
    check_party_count(p);
    if (probs_.size() != (std::size_t{1} << p)) throw std::invalid_argument("ErrorDistribution: expected 2^p probabilities");
    double total = 0.0;
    for (double& q : probs_) {
      q = clamp_probability(q, "ErrorDistribution entry");
      total += q;
    }
    if (std::abs(total - 1.0) > kNormTolerance)
      throw std::invalid_argument("ErrorDistribution: probabilities sum to " + std::to_string(total));
    qx_ = clamp_probability(qx_, "ErrorDistribution qx");
  }

  int parties() const { return p_; }
  double qx() const { return qx_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](BitPattern d) const { return probs_.at(d.value()); }
  double at(std::uint32_t index) const { return probs_.at(index); }
  const std::vector<double>& probs() const { return probs_; }

  ErrorDistribution with_qx(double qx) const { return {p_, probs_, qx}; }

 private:
  int p_;
  std::vector<double> probs_;
  double qx_;
};

/// Independent-link product model.
inline ErrorDistribution distribution_from_scenario(const NoiseScenario& s) {
  s.validate();
  const int p = s.parties();
  std::vector<double> probs(std::size_t{1} << p);
  for (std::uint32_t v = 0; v < probs.size(); ++v) {
    const BitPattern delta(v, p);
    double prob = 1.0;
    for (int j = 1; j <= p; ++j) {
      const double q = s.link_noise[static_cast<std::size_t>(j - 1)];
      prob *= delta.bob(j) ? q : 1.0 - q;
    }
    probs[v] = prob;
  }
  return {p, std::move(probs), s.qx};
}

/// Q_AB_j: probability that Bob_j disagrees with Alice.
inline double marginal_link_error(const ErrorDistribution& d, int j) {
  const int p = d.parties();
  if (j < 1 || j > p) throw std::out_of_range("marginal_link_error: Bob index " + std::to_string(j) + " out of range");
  double sum = 0.0;
  for (std::uint32_t v = 0; v < d.size(); ++v)
    if (BitPattern(v, p).bob(j)) sum += d.at(v);
  return sum;
}

inline std::vector<double> marginal_link_errors(const ErrorDistribution& d) {
  std::vector<double> out;
  for (int j = 1; j <= d.parties(); ++j) out.push_back(marginal_link_error(d, j));
  return out;
}

/// Explicit (possibly correlated) per-pattern probabilities; absent
/// patterns have probability zero.
inline ErrorDistribution direct_distribution(const std::map<BitPattern, double>& probs, double qx) {
  if (probs.empty()) throw std::invalid_argument("direct_distribution: no patterns given");
  const int p = probs.begin()->first.width();
  check_party_count(p);
  std::vector<double> dense(std::size_t{1} << p, 0.0);
  double total = 0.0;
  for (const auto& [pattern, prob] : probs) {
    if (pattern.width() != p) throw std::invalid_argument("direct_distribution: mixed pattern widths");
    if (!(prob >= 0.0)) throw std::invalid_argument("direct_distribution: negative probability for " + pattern.to_string());
    dense[pattern.value()] = prob;
    total += prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("direct_distribution: probabilities sum to " + std::to_string(total));
  for (double& q : dense) q /= total;
  if (!(qx >= 0.0 && qx <= 1.0)) throw std::invalid_argument("direct_distribution: qx outside [0,1]");
  return {p, std::move(dense), qx};
}

}  // namespace scad
