#pragma once

// Monte Carlo run of the classical S-CAD post-processing on raw keys drawn
// from the independent-link noise model. Only error patterns relative to
// Alice are sampled; the accept rule and the error statistics depend on
// nothing else.
//
// Randomness: std::mt19937_64 seeded directly with SimConfig::seed. Every
// derived quantity is computed by hand-written code below, so runs are
// bit-identical across standard libraries:
//   uniform double  (next() >> 11) * 2^-53
//   Bernoulli(q)    uniform < q
//   bounded int     Lemire's multiply-shift with rejection
//   permutation     Fisher-Yates, i from n-1 down to 1

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scad/acceptance.hpp"
#include "scad/core_math.hpp"
#include "scad/noise_model.hpp"

namespace scad {

inline constexpr const char* kSimRngAlgorithm = "mt19937_64; u53 = (x >> 11) * 2^-53; Lemire bounded ints; Fisher-Yates";

class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool bernoulli(double q) { return uniform() < q; }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    __extension__ using u128 = unsigned __int128;
    u128 m = static_cast<u128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<u128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

/// One round's error pattern: Bob_j's bit is set with probability links[j-1].
inline BitPattern sample_round(std::span<const double> links, SimRng& rng) {
  const int p = static_cast<int>(links.size());
  check_party_count(p);
  std::uint32_t v = 0;
  for (int j = 0; j < p; ++j) {
    const double q = links[static_cast<std::size_t>(j)];
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sample_round: link probability outside [0,1]");
    v = (v << 1) | (rng.bernoulli(q) ? 1U : 0U);
  }
  return {v, p};
}

inline BitPattern sample_round(const NoiseScenario& s, SimRng& rng) {
  s.validate();
  return sample_round(s.link_noise, rng);
}

struct SimConfig {
  NoiseScenario scenario;
  CadMask mask;
  std::uint64_t rounds = 2;
  std::uint64_t seed = 0;

  void validate() const {
    scenario.validate();
    if (mask.parties() != scenario.parties()) throw std::invalid_argument("SimConfig: mask width does not match party count");
    if (rounds < 2 || rounds % 2 != 0) throw std::invalid_argument("SimConfig: rounds must be even and at least 2, got " + std::to_string(rounds));
  }
};

/// Counts over consecutive (Left, Right) pairs of a round sequence.
struct BlockTally {
  std::uint64_t blocks = 0;
  std::uint64_t accepted = 0;
  std::vector<std::uint64_t> left_errors;  // per Bob, over accepted blocks
};

/// Pairs rounds (0,1), (2,3), ... and applies the accept rule.
inline BlockTally tally_blocks(std::span<const std::uint32_t> rounds, const CadMask& mask) {
  if (rounds.size() % 2 != 0) throw std::invalid_argument("tally_blocks: odd number of rounds");
  const int p = mask.parties();
  BlockTally t;
  t.blocks = rounds.size() / 2;
  t.left_errors.assign(static_cast<std::size_t>(p), 0);
  std::vector<std::uint64_t> by_pattern(std::size_t{1} << p, 0);
  for (std::size_t b = 0; b < t.blocks; ++b) {
    const std::uint32_t left = rounds[2 * b];
    if (block_accepted(left, rounds[2 * b + 1], mask.value())) ++by_pattern[left];
  }
  for (std::uint32_t v = 0; v < by_pattern.size(); ++v) {
    t.accepted += by_pattern[v];
    for (int j = 1; j <= p; ++j)
      if ((v >> (p - j)) & 1U) t.left_errors[static_cast<std::size_t>(j - 1)] += by_pattern[v];
  }
  return t;
}

/// Accept flag of every consecutive block.
inline std::vector<bool> acceptance_flags(std::span<const std::uint32_t> rounds, const CadMask& mask) {
  if (rounds.size() % 2 != 0) throw std::invalid_argument("acceptance_flags: odd number of rounds");
  std::vector<bool> out(rounds.size() / 2);
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = block_accepted(rounds[2 * b], rounds[2 * b + 1], mask.value());
  return out;
}

struct SimResult {
  std::uint64_t blocks_total = 0;
  std::uint64_t blocks_accepted = 0;
  double p_accept_hat = 0.0;
  /// Per Bob; NaN when no block was accepted.
  std::vector<double> post_error_hat;
  double stderr_p_accept = 0.0;
  std::string rng_algorithm = kSimRngAlgorithm;

  bool post_error_defined() const { return blocks_accepted > 0; }

  /// Binomial standard error of post_error_hat[j-1].
  double stderr_post_error(int j) const {
    if (!post_error_defined()) return std::numeric_limits<double>::quiet_NaN();
    const double e = post_error_hat.at(static_cast<std::size_t>(j - 1));
    return std::sqrt(e * (1.0 - e) / static_cast<double>(blocks_accepted));
  }
};

/// Samples `rounds` error patterns, permutes them with one Fisher-Yates
/// shuffle, and pairs consecutive entries into Left/Right blocks.
inline SimResult run_sim(const SimConfig& c) {
  c.validate();
  SimRng rng(c.seed);
  std::vector<std::uint32_t> rounds(c.rounds);
  for (auto& r : rounds) r = sample_round(c.scenario.link_noise, rng).value();
  for (std::uint64_t i = rounds.size() - 1; i > 0; --i) std::swap(rounds[i], rounds[rng.below(i + 1)]);

  const BlockTally t = tally_blocks(rounds, c.mask);
  SimResult r;
  r.blocks_total = t.blocks;
  r.blocks_accepted = t.accepted;
  r.p_accept_hat = static_cast<double>(t.accepted) / static_cast<double>(t.blocks);
  r.stderr_p_accept = std::sqrt(r.p_accept_hat * (1.0 - r.p_accept_hat) / static_cast<double>(t.blocks));
  for (std::uint64_t e : t.left_errors)
    r.post_error_hat.push_back(t.accepted > 0 ? static_cast<double>(e) / static_cast<double>(t.accepted)
                                              : std::numeric_limits<double>::quiet_NaN());
  return r;
}

}  // namespace scad
