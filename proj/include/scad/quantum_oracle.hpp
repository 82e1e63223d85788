#pragma once

// Exact small-system checks of the S-CAD security analysis: GHZ states,
// collective attacks with an orthonormal Eve basis, the delayed-measurement
// CAD circuit, and the conditional entropy H(A|EM) after acceptance.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scad/acceptance.hpp"
#include "scad/core_math.hpp"
#include "scad/keyrate.hpp"
#include "scad/noise_model.hpp"
#include "scad/quantum_state.hpp"

namespace scad::quantum {

/// Largest party count the oracle accepts for two-block computations.
inline constexpr int kOracleMaxParties = 3;

/// (|0,x> + (-1)^y |1,x-bar>)/sqrt(2) on registers A (1 qubit) and B (p qubits).
inline PureState ghz_state(BitPattern x, int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("ghz_state: phase bit must be 0 or 1");
  const int p = x.width();
  RegisterMap map{{"A", 1}, {"B", p}};
  Vector v = Vector::Zero(static_cast<Eigen::Index>(map.dimension()));
  const double r = std::numbers::sqrt2 / 2.0;
  v(static_cast<Eigen::Index>(map.index({{"A", 0}, {"B", x.value()}}))) = r;
  v(static_cast<Eigen::Index>(map.index({{"A", 1}, {"B", x.complement().value()}}))) = y ? -r : r;
  return {std::move(map), std::move(v)};
}

/// Eve's weights lambda_Delta^y of a GHZ-diagonal collective attack, stored
/// at index (Delta << 1) | y.
class AttackState {
 public:
  static constexpr double kNormTolerance = 1e-10;

  AttackState(int p, std::vector<double> lambdas) : p_(p), lambda_(std::move(lambdas)) {
    check_party_count(p);
    if (lambda_.size() != (std::size_t{1} << (p + 1))) throw std::invalid_argument("AttackState: expected 2^(p+1) weights");
    double total = 0.0;
    for (double l : lambda_) {
      if (!(l >= 0.0)) throw std::invalid_argument("AttackState: weights must be nonnegative");
      total += l;
    }
    if (std::abs(total - 1.0) > kNormTolerance) throw std::invalid_argument("AttackState: weights sum to " + std::to_string(total));
  }

  int parties() const { return p_; }
  double lambda(BitPattern delta, int y) const { return lambda_.at((std::size_t{delta.value()} << 1) | static_cast<std::size_t>(y)); }
  const std::vector<double>& weights() const { return lambda_; }

  /// Q_Delta = lambda_Delta^0 + lambda_Delta^1 and Q_X = sum lambda_Delta^1.
  ErrorDistribution error_distribution() const {
    std::vector<double> q(std::size_t{1} << p_);
    double qx = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) {
      q[d] = lambda_[2 * d] + lambda_[2 * d + 1];
      qx += lambda_[2 * d + 1];
    }
    return {p_, std::move(q), qx};
  }

  /// The attack's own phase-flip weights nu_Delta = lambda_Delta^1.
  NuVector nu() const {
    NuVector out;
    for (std::size_t d = 0; d < lambda_.size() / 2; ++d) out.nu.push_back(lambda_[2 * d + 1]);
    return out;
  }

 private:
  int p_;
  std::vector<double> lambda_;
};

/// sum sqrt(lambda_Delta^y) |g(Delta;y)>_AB |e_{Delta,y}>_E, with E a
/// (p+1)-qubit register whose basis index is (Delta << 1) | y.
inline PureState attack_state(const AttackState& a) {
  const int p = a.parties();
  RegisterMap map{{"A", 1}, {"B", p}, {"E", p + 1}};
  Vector v = Vector::Zero(static_cast<Eigen::Index>(map.dimension()));
  const auto e_width = static_cast<std::size_t>(map.width("E"));
  for (std::uint32_t d = 0; d < (std::uint32_t{1} << p); ++d) {
    for (int y = 0; y <= 1; ++y) {
      const double l = a.lambda(BitPattern(d, p), y);
      if (l == 0.0) continue;
      const PureState g = ghz_state(BitPattern(d, p), y);
      const std::size_t e = (std::size_t{d} << 1) | static_cast<std::size_t>(y);
      // A and B occupy the bits above E.
      for (Eigen::Index i = 0; i < g.amplitudes().size(); ++i)
        v(static_cast<Eigen::Index>((static_cast<std::size_t>(i) << e_width) | e)) += std::sqrt(l) * g.amplitudes()(i);
    }
  }
  PureState s(std::move(map), std::move(v));
  s.check_normalized(1e-10);
  return s;
}

/// Alice's DCNOT of her Left and Right qubits into M, then for every CAD
/// Bob j a DCNOT of his Left and Right qubits into rej[j-1] followed by a
/// CNOT from M into rej[j-1]. Needs registers AL, BL, AR, BR, M, rej.
inline PureState delayed_cad_circuit(PureState s, const CadMask& mask) {
  const RegisterMap& map = s.registers();
  for (const char* r : {"AL", "BL", "AR", "BR", "M", "rej"})
    if (!map.contains(r)) throw std::invalid_argument(std::string("delayed_cad_circuit: missing register ") + r);
  const int p = mask.parties();
  if (map.width("AL") != 1 || map.width("AR") != 1 || map.width("M") != 1 || map.width("BL") != p || map.width("BR") != p || map.width("rej") != p)
    throw std::invalid_argument("delayed_cad_circuit: register widths do not match the mask");
  s = dcnot(std::move(s), {"AL", 0}, {"AR", 0}, {"M", 0});
  for (int j = 1; j <= p; ++j) {
    if (!mask.enabled(j)) continue;
    s = dcnot(std::move(s), {"BL", j - 1}, {"BR", j - 1}, {"rej", j - 1});
    s = cnot(std::move(s), {"M", 0}, {"rej", j - 1});
  }
  return s;
}

/// Register layout of one two-round block without Eve.
inline RegisterMap block_registers(int p) { return {{"AL", 1}, {"BL", p}, {"AR", 1}, {"BR", p}, {"M", 1}, {"rej", p}}; }

/// |g(x;y)>_L |g(z;w)>_R |0>_M |0>_rej in block_registers(p).
inline PureState block_input(BitPattern x, int y, BitPattern z, int w) {
  const int p = x.width();
  PureState l = ghz_state(x, y).renamed("A", "AL").renamed("B", "BL");
  PureState r = ghz_state(z, w).renamed("A", "AR").renamed("B", "BR");
  return kron(kron(l, r), PureState::zeros({{"M", 1}, {"rej", p}}));
}

/// Closed form of the circuit output on a basis block:
/// |(x XOR z) AND C>_rej (1/sqrt 2) sum_m (-1)^(w m) |m>_M |g(x, m, z XOR m^p; y XOR w)>.
inline PureState delayed_cad_closed_form(BitPattern x, int y, BitPattern z, int w, const CadMask& mask) {
  const int p = x.width();
  const RegisterMap map = block_registers(p);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(map.dimension()));
  const std::uint32_t ones = BitPattern::full_mask(p);
  const std::uint32_t rej = (x.value() ^ z.value()) & mask.value();
  for (std::uint32_t m = 0; m <= 1; ++m) {
    for (std::uint32_t a = 0; a <= 1; ++a) {
      const std::uint32_t mp = m ? ones : 0;
      const std::uint32_t ap = a ? ones : 0;
      const int sign = ((m & static_cast<std::uint32_t>(w)) ^ (a & static_cast<std::uint32_t>(y ^ w))) ? -1 : 1;
      const std::size_t i = map.index({{"AL", a}, {"BL", x.value() ^ ap}, {"AR", m ^ a}, {"BR", z.value() ^ mp ^ ap}, {"M", m}, {"rej", rej}});
      v(static_cast<Eigen::Index>(i)) += 0.5 * sign;
    }
  }
  return {map, std::move(v)};
}

/// Two copies of the attack (Left, Right) with empty M and rej ancillas.
/// Registers: AL BL EL AR BR ER M rej.
inline PureState two_block_attack_state(const AttackState& a) {
  const PureState one = attack_state(a);
  return kron(kron(one.with_suffix("L"), one.with_suffix("R")), PureState::zeros({{"M", 1}, {"rej", a.parties()}}));
}

struct ConditionedState {
  DensityState rho;  // registers A, EL, ER, M
  double p_accept;
};

/// Runs the delayed-measurement circuit on two attacked rounds, keeps the
/// rej = 0 branch, discards the Bobs and Alice's Right qubit, and measures
/// Alice's Left qubit and M. Returns the normalised rho_AEM and the exact
/// acceptance probability.
inline ConditionedState conditioned_rho_aem(const AttackState& a, const CadMask& mask) {
  const int p = a.parties();
  if (p > kOracleMaxParties) throw std::invalid_argument("conditioned_rho_aem: oracle limited to p <= 3");
  if (mask.parties() != p) throw std::invalid_argument("conditioned_rho_aem: mask width does not match attack");
  PureState s = delayed_cad_circuit(two_block_attack_state(a), mask);
  const std::size_t rej = s.registers().mask("rej");
  Vector& v = s.amplitudes();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (static_cast<std::size_t>(i) & rej) v(i) = 0.0;
  const double pa = v.squaredNorm();
  if (pa <= 0.0) throw DegenerateAcceptance();
  v /= std::sqrt(pa);
  DensityState rho = s.reduce({"AL", "EL", "ER", "M"}).dephased("AL").dephased("M").renamed("AL", "A");
  return {std::move(rho), pa};
}

/// Exact H(A|EM) of the accepted raw-key bit under the attack.
inline double exact_conditional_entropy(const AttackState& a, const CadMask& mask) {
  return conditional_entropy(conditioned_rho_aem(a, mask).rho, "A", {"EL", "ER", "M"});
}

/// H(A|E, M = m) of the accepted raw-key bit.
inline double entropy_given_message(const AttackState& a, const CadMask& mask, std::uint32_t m) {
  const auto [rho_m, prob] = conditioned_rho_aem(a, mask).rho.conditioned("M", m);
  (void)prob;
  return conditional_entropy(rho_m, "A", {"EL", "ER"});
}

/// One index i of the bound: n0 = <F_i^0|F_i^0>, n1 = <F_i^1|F_i^1>,
/// re = Re <F_i^0|F_i^1>.
struct Theorem1Term {
  double n0;
  double n1;
  double re;
};

/// sum_i ((n0 + n1)/M) (h(n0/(n0+n1)) - h(nu_i)) with
/// nu_i = 1/2 + sqrt((n0 - n1)^2 + 4 re^2) / (2 (n0 + n1)).
inline double theorem1_bound(std::span<const Theorem1Term> terms, double normalization) {
  double total = 0.0;
  for (const auto& t : terms) {
    if (!(t.n0 >= 0.0 && t.n1 >= 0.0)) throw std::invalid_argument("theorem1_bound: norms must be nonnegative");
    if (std::abs(t.re) > std::sqrt(t.n0 * t.n1) * (1.0 + 1e-12) + 1e-15) throw std::invalid_argument("theorem1_bound: |re| exceeds the Cauchy-Schwarz limit");
    total += t.n0 + t.n1;
  }
  if (std::abs(total - normalization) > 1e-10 * std::max(1.0, normalization))
    throw std::invalid_argument("theorem1_bound: normalization does not equal the summed norms");
  double bound = 0.0;
  for (const auto& t : terms) {
    if (t.n0 == 0.0 || t.n1 == 0.0) continue;
    const double n = t.n0 + t.n1;
    const double nu = std::min(1.0, 0.5 + std::sqrt((t.n0 - t.n1) * (t.n0 - t.n1) + 4.0 * t.re * t.re) / (2.0 * n));
    bound += n / normalization * (binary_entropy(t.n0 / n) - binary_entropy(nu));
  }
  return bound;
}

/// The terms obtained for an accepted block when Eve's vectors are
/// orthogonal: n0 = n1 = Q_x Q_z and re = (Q_x - 2 nu_x)(Q_z - 2 nu_z) for
/// every (x, z) in the acceptance set; the normalisation is 2 p_a.
inline std::vector<Theorem1Term> attack_theorem1_terms(const ErrorDistribution& d, const CadMask& mask, const NuVector& nu) {
  std::vector<Theorem1Term> out;
  for (const auto& [x, z] : acceptance_set(mask)) {
    const double qq = d[x] * d[z];
    out.push_back({qq, qq, (d[x] - 2.0 * nu[x]) * (d[z] - 2.0 * nu[z])});
  }
  return out;
}

/// rho_AE = (1/M) sum_a |a><a| (x) sum_i |F_i^a><F_i^a| on registers A and E;
/// every F vector must have dimension 2^k.
inline DensityState classical_quantum_state(std::span<const Vector> f0, std::span<const Vector> f1) {
  if (f0.size() != f1.size() || f0.empty()) throw std::invalid_argument("classical_quantum_state: need matching nonempty F lists");
  const Eigen::Index dim = f0[0].size();
  int k = 0;
  while ((Eigen::Index{1} << k) < dim) ++k;
  if ((Eigen::Index{1} << k) != dim) throw std::invalid_argument("classical_quantum_state: F dimension must be a power of two");
  Matrix rho = Matrix::Zero(2 * dim, 2 * dim);
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (f0[i].size() != dim || f1[i].size() != dim) throw std::invalid_argument("classical_quantum_state: F dimensions differ");
    rho.topLeftCorner(dim, dim) += f0[i] * f0[i].adjoint();
    rho.bottomRightCorner(dim, dim) += f1[i] * f1[i].adjoint();
  }
  rho /= rho.trace().real();
  return {RegisterMap{{"A", 1}, {"E", k}}, std::move(rho)};
}

}  // namespace scad::quantum
