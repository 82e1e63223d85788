#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scad/keyrate.hpp"
#include "scad/quantum_oracle.hpp"

using namespace scad;
using namespace scad::quantum;

namespace {

AttackState random_attack(int p, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> l(std::size_t{1} << (p + 1));
  double s = 0.0;
  for (double& v : l) s += (v = e(rng));
  for (double& v : l) v /= s;
  return {p, std::move(l)};
}

PureState basis(RegisterMap map, std::size_t index) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(map.dimension()));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return {std::move(map), std::move(v)};
}

double shannon(double x) { return x <= 0 || x >= 1 ? 0.0 : -x * std::log2(x) - (1 - x) * std::log2(1 - x); }

}  // namespace

TEST(GhzState, ThreeBobExample) {
  const auto g = ghz_state(BitPattern::parse("101"), 1);
  const double r = std::sqrt(0.5);
  for (std::size_t i = 0; i < 16; ++i) {
    const double want = i == 0b0101 ? r : (i == 0b1010 ? -r : 0.0);
    EXPECT_NEAR(std::abs(g.amplitude(i) - want), 0.0, 1e-15) << i;
  }
}

TEST(GhzState, BellStateForOneBob) {
  const auto g = ghz_state(BitPattern::parse("0"), 0);
  EXPECT_NEAR(g.amplitude(0).real(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(g.amplitude(3).real(), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(g.amplitude(1), Complex(0.0));
  EXPECT_EQ(g.amplitude(2), Complex(0.0));
}

TEST(GhzState, BasisIsOrthonormal) {
  for (int p = 1; p <= 3; ++p) {
    for (auto x : enumerate_patterns(p))
      for (int y : {0, 1})
        for (auto z : enumerate_patterns(p))
          for (int w : {0, 1}) {
            const double want = (x == z && y == w) ? 1.0 : 0.0;
            EXPECT_NEAR(std::abs(overlap(ghz_state(x, y), ghz_state(z, w))), want, 1e-15);
          }
  }
}

TEST(Dcnot, Examples) {
  const RegisterMap m{{"a", 1}, {"b", 1}, {"c", 1}};
  const auto out = dcnot(basis(m, 0b110), {"a", 0}, {"b", 0}, {"c", 0});
  EXPECT_EQ(out.amplitude(0b110), Complex(1.0));
  const auto out2 = dcnot(basis(m, 0b100), {"a", 0}, {"b", 0}, {"c", 0});
  EXPECT_EQ(out2.amplitude(0b101), Complex(1.0));
  EXPECT_THROW(dcnot(basis(m, 0), {"a", 0}, {"a", 0}, {"c", 0}), std::invalid_argument);
}

TEST(Dcnot, IsAnInvolution) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  const RegisterMap m{{"a", 2}, {"b", 1}, {"c", 2}};
  Vector v(static_cast<Eigen::Index>(m.dimension()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(n(rng), n(rng));
  v.normalize();
  const PureState s(m, v);
  const auto twice = dcnot(dcnot(s, {"a", 1}, {"b", 0}, {"c", 0}), {"a", 1}, {"b", 0}, {"c", 0});
  EXPECT_NEAR((twice.amplitudes() - v).norm(), 0.0, 1e-15);
}

TEST(AttackState, PerfectGhzWithOneEveState) {
  std::vector<double> l(8, 0.0);
  l[0] = 1.0;
  const auto s = attack_state(AttackState(2, l));
  const auto g = ghz_state(BitPattern::parse("00"), 0);
  const auto e = PureState::zeros({{"E", 3}});
  EXPECT_NEAR(std::abs(overlap(s, kron(g, e))), 1.0, 1e-15);
}

TEST(AttackState, GhzDiagonalOfMarginalEqualsLambda) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_attack(2, rng);
    const auto rho = attack_state(a).reduce({"A", "B"});
    for (auto d : enumerate_patterns(2))
      for (int y : {0, 1}) {
        const Vector g = ghz_state(d, y).amplitudes();
        EXPECT_NEAR((g.adjoint() * rho.matrix() * g)(0, 0).real(), a.lambda(d, y), 1e-12);
      }
  }
}

TEST(AttackState, UniformWeightsGiveMaximallyMixedMarginal) {
  const auto rho = attack_state(AttackState(2, std::vector<double>(8, 0.125))).reduce({"A", "B"});
  EXPECT_NEAR((rho.matrix() - Matrix::Identity(8, 8) / 8.0).norm(), 0.0, 1e-14);
}

TEST(AttackState, ErrorDistributionAndNu) {
  std::vector<double> l{0.5, 0.1, 0.1, 0.05, 0.1, 0.05, 0.06, 0.04};
  const AttackState a(2, l);
  const auto d = a.error_distribution();
  EXPECT_NEAR(d.at(0), 0.6, 1e-15);
  EXPECT_NEAR(d.at(3), 0.1, 1e-15);
  EXPECT_NEAR(d.qx(), 0.24, 1e-15);
  EXPECT_EQ(a.nu().nu, (std::vector<double>{0.1, 0.05, 0.05, 0.04}));
  EXPECT_THROW(AttackState(2, std::vector<double>(8, 0.1)), std::invalid_argument);
  EXPECT_THROW(AttackState(2, std::vector<double>(4, 0.25)), std::invalid_argument);
}

TEST(DelayedCad, CircuitMatchesClosedFormOnAllBasisInputs) {
  for (int p = 1; p <= 2; ++p) {
    for (auto m : enumerate_patterns(p)) {
      const CadMask mask(m);
      for (auto x : enumerate_patterns(p))
        for (auto z : enumerate_patterns(p))
          for (int y : {0, 1})
            for (int w : {0, 1}) {
              const auto circuit = delayed_cad_circuit(block_input(x, y, z, w), mask);
              const auto closed = delayed_cad_closed_form(x, y, z, w, mask);
              EXPECT_GE(std::norm(overlap(closed, circuit)), 1.0 - 1e-10);
            }
    }
  }
}

TEST(DelayedCad, NoCadLeavesRejectRegisterEmpty) {
  for (auto x : enumerate_patterns(2))
    for (auto z : enumerate_patterns(2)) {
      const auto s = delayed_cad_circuit(block_input(x, 1, z, 0), CadMask::parse("00"));
      const std::size_t rej = s.registers().mask("rej");
      for (std::size_t i = 0; i < s.registers().dimension(); ++i)
        if (i & rej) {
          EXPECT_EQ(s.amplitude(i), Complex(0.0));
        }
    }
}

TEST(DelayedCad, NoiselessInputsAreAccepted) {
  const auto s = delayed_cad_circuit(block_input(BitPattern::parse("00"), 0, BitPattern::parse("00"), 0), CadMask::parse("11"));
  const std::size_t rej = s.registers().mask("rej");
  double accepted = 0.0;
  for (std::size_t i = 0; i < s.registers().dimension(); ++i)
    if (!(i & rej)) accepted += std::norm(s.amplitude(i));
  EXPECT_NEAR(accepted, 1.0, 1e-15);
}

TEST(ConditionedState, NoiselessAttackLeavesOneBit) {
  std::vector<double> l(8, 0.0);
  l[0] = 1.0;
  for (const char* m : {"11", "10", "01"}) {
    const auto c = conditioned_rho_aem(AttackState(2, l), CadMask::parse(m));
    EXPECT_NEAR(c.p_accept, 1.0, 1e-12);
    EXPECT_NO_THROW(c.rho.validate());
    EXPECT_NEAR(exact_conditional_entropy(AttackState(2, l), CadMask::parse(m)), 1.0, 1e-10);
  }
}

TEST(ConditionedState, SoundAgainstRandomAttacks) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 25; ++t) {
    const auto a = random_attack(2, rng);
    const auto d = a.error_distribution();
    for (const char* m : {"11", "10"}) {
      const CadMask mask = CadMask::parse(m);
      const auto c = conditioned_rho_aem(a, mask);
      EXPECT_NEAR(c.p_accept, p_accept(d, mask), 1e-10);
      const double exact = conditional_entropy(c.rho, "A", {"EL", "ER", "M"});
      EXPECT_GE(exact, entropy_bound(d, mask).value - 1e-9);
      // For this attack family the bound is tight at the attack's own nu.
      EXPECT_NEAR(exact, entropy_objective(d, mask, a.nu()), 1e-9);
    }
  }
}

TEST(ConditionedState, MessageValuesCarryEqualEntropy) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t) {
    const auto a = random_attack(2, rng);
    const CadMask mask = CadMask::parse("11");
    EXPECT_NEAR(entropy_given_message(a, mask, 0), entropy_given_message(a, mask, 1), 1e-9);
    EXPECT_NEAR(entropy_given_message(a, mask, 0), exact_conditional_entropy(a, mask), 1e-9);
  }
}

TEST(ConditionedState, RejectsLargeP) {
  std::vector<double> l(32, 0.0);
  l[0] = 1.0;
  EXPECT_THROW(conditioned_rho_aem(AttackState(4, l), CadMask::parse("1111")), std::invalid_argument);
}

TEST(Theorem1Bound, SinglePairExamples) {
  const std::vector<Theorem1Term> none{{0.5, 0.5, 0.0}};
  EXPECT_NEAR(theorem1_bound(none, 1.0), 0.0, 1e-15);
  const std::vector<Theorem1Term> same{{0.5, 0.5, 0.5}};
  EXPECT_NEAR(theorem1_bound(same, 1.0), 1.0, 1e-15);
  const std::vector<Theorem1Term> bad{{0.5, 0.5, 0.6}};
  EXPECT_THROW(theorem1_bound(bad, 1.0), std::invalid_argument);
  EXPECT_THROW(theorem1_bound(same, 2.0), std::invalid_argument);
}

TEST(Theorem1Bound, SinglePairMatchesExactEntropy) {
  // Orthogonal Eve states reveal the bit; identical ones reveal nothing.
  Vector e0(2), e1(2);
  e0 << std::sqrt(0.5), 0.0;
  e1 << 0.0, std::sqrt(0.5);
  const std::vector<Vector> f0{e0}, f1{e1}, f1same{e0};
  EXPECT_NEAR(conditional_entropy(classical_quantum_state(f0, f1), "A", {"E"}), 0.0, 1e-12);
  EXPECT_NEAR(conditional_entropy(classical_quantum_state(f0, f1same), "A", {"E"}), 1.0, 1e-12);
}

TEST(Theorem1Bound, EqualsEntropyObjectiveForAttackInnerProducts) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_attack(3, rng);
    const auto d = a.error_distribution();
    for (const char* m : {"111", "100", "011"}) {
      const CadMask mask = CadMask::parse(m);
      const auto terms = attack_theorem1_terms(d, mask, a.nu());
      EXPECT_NEAR(theorem1_bound(terms, 2 * p_accept(d, mask)), entropy_objective(d, mask, a.nu()), 1e-10);
    }
  }
}

TEST(Theorem1Bound, NeverExceedsExactEntropyOfRandomCqStates) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  for (int t = 0; t < 200; ++t) {
    const int count = 1 + t % 4;
    const Eigen::Index dim = 4;
    std::vector<Vector> f0, f1;
    std::vector<Theorem1Term> terms;
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
      Vector a(dim), b(dim);
      for (Eigen::Index k = 0; k < dim; ++k) {
        a(k) = Complex(n(rng), n(rng));
        b(k) = Complex(n(rng), n(rng));
      }
      f0.push_back(a);
      f1.push_back(b);
      terms.push_back({a.squaredNorm(), b.squaredNorm(), a.dot(b).real()});
      total += a.squaredNorm() + b.squaredNorm();
    }
    const double exact = conditional_entropy(classical_quantum_state(f0, f1), "A", {"E"});
    EXPECT_LE(theorem1_bound(terms, total), exact + 1e-9);
  }
}

TEST(ConditionalEntropy, KnownIdentities) {
  const auto bell = DensityState::from_pure(ghz_state(BitPattern::parse("0"), 0));
  EXPECT_NEAR(conditional_entropy(bell, "A", {"B"}), -1.0, 1e-12);

  Matrix prod = Matrix::Zero(4, 4);
  prod(0, 0) = 0.5;
  prod(2, 2) = 0.5;
  EXPECT_NEAR(conditional_entropy(DensityState({{"A", 1}, {"B", 1}}, prod), "A", {"B"}), 1.0, 1e-12);

  // p(a, b): (0,0) 0.4, (0,1) 0.1, (1,0) 0.2, (1,1) 0.3.
  Matrix cc = Matrix::Zero(4, 4);
  cc(0, 0) = 0.4;
  cc(1, 1) = 0.1;
  cc(2, 2) = 0.2;
  cc(3, 3) = 0.3;
  const double want = 0.6 * shannon(0.4 / 0.6) + 0.4 * shannon(0.1 / 0.4);
  EXPECT_NEAR(conditional_entropy(DensityState({{"A", 1}, {"B", 1}}, cc), "A", {"B"}), want, 1e-12);
  EXPECT_THROW(conditional_entropy(bell, "A", {"A"}), std::invalid_argument);
}

TEST(DensityState, PartialTraceOfProductState) {
  const auto a = ghz_state(BitPattern::parse("1"), 1);
  const auto b = PureState::zeros({{"C", 2}});
  const auto rho = DensityState::from_pure(kron(a, b));
  const auto back = rho.partial_trace({"A", "B"});
  const Vector v = a.amplitudes();
  EXPECT_NEAR((back.matrix() - v * v.adjoint()).norm(), 0.0, 1e-15);
  EXPECT_NO_THROW(back.validate());
}
