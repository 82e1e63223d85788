#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scad/core_math.hpp"
#include "scad/noise_model.hpp"

namespace scad {

/// Thrown when no two-round block can ever be accepted (p_a = 0).
class DegenerateAcceptance : public std::runtime_error {
 public:
  DegenerateAcceptance() : std::runtime_error("acceptance probability is zero") {}
};

/// Which Bobs run advantage distillation: bit j set means Bob_j checks
/// parities. The all-zero mask stands for the plain protocol without CAD.
class CadMask {
 public:
  explicit CadMask(BitPattern bits) : bits_(bits) {}
  static CadMask parse(std::string_view s) { return CadMask(BitPattern::parse(s)); }
  static CadMask all(int p) { return CadMask(BitPattern::ones(p)); }
  static CadMask none(int p) { return CadMask(BitPattern::zeros(p)); }

  BitPattern bits() const { return bits_; }
  std::uint32_t value() const { return bits_.value(); }
  int parties() const { return bits_.width(); }
  bool enabled(int j) const { return bits_.bob(j); }
  bool is_none() const { return bits_.value() == 0; }
  int count() const { return bits_.popcount(); }
  std::string to_string() const { return bits_.to_string(); }

  friend bool operator==(const CadMask&, const CadMask&) = default;

 private:
  BitPattern bits_;
};

/// Left/right error patterns of one two-round block.
struct PatternPair {
  BitPattern left;
  BitPattern right;
  friend bool operator==(const PatternPair&, const PatternPair&) = default;
};

/// A block passes iff every CAD-enabled Bob saw the same error in both rounds.
inline bool block_accepted(std::uint32_t left, std::uint32_t right, std::uint32_t mask) {
  return ((left ^ right) & mask) == 0;
}

/// Every (x, z) with (x XOR z) AND mask = 0, ordered by x then z.
inline std::vector<PatternPair> acceptance_set(const CadMask& mask) {
  const int p = mask.parties();
  const std::uint32_t n = std::uint32_t{1} << p;
  std::vector<PatternPair> out;
  out.reserve(std::size_t{1} << (2 * p - mask.count()));
  for (std::uint32_t x = 0; x < n; ++x)
    for (std::uint32_t z = 0; z < n; ++z)
      if (block_accepted(x, z, mask.value())) out.push_back({BitPattern(x, p), BitPattern(z, p)});
  return out;
}

inline void check_mask(const ErrorDistribution& d, const CadMask& mask) {
  if (d.parties() != mask.parties())
    throw std::invalid_argument("CAD mask width " + std::to_string(mask.parties()) + " does not match party count " + std::to_string(d.parties()));
}

/// Probability that a two-round block is accepted by every Bob.
inline double p_accept(const ErrorDistribution& d, const CadMask& mask) {
  check_mask(d, mask);
  const std::uint32_t m = mask.value();
  const std::uint32_t free_bits = ~m & BitPattern::full_mask(d.parties());
  double total = 0.0;
  for (std::uint32_t x = 0; x < d.size(); ++x) {
    const double qx = d.at(x);
    if (qx == 0.0) continue;
    // z = x XOR t for every t that only touches CAD-off Bobs.
    double inner = 0.0;
    for (std::uint32_t t = free_bits;; t = (t - 1) & free_bits) {
      inner += d.at(x ^ t);
      if (t == 0) break;
    }
    total += qx * inner;
  }
  if (total <= 0.0) throw DegenerateAcceptance();
  return total;
}

}  // namespace scad
