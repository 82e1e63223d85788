#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scad {

/// Largest party count for which dense 2^p enumeration is allowed.
inline constexpr int kMaxParties = 16;

/// Inputs this far outside [0,1] are clamped instead of rejected.
inline constexpr double kProbabilitySlack = 1e-12;

/// A p-bit string. Bob_j (1-based) lives at bit (p - j), so Bob_1 is the
/// most significant bit and the rendered string reads as a binary number
/// with Bob_1 leftmost.
class BitPattern {
 public:
  constexpr BitPattern() = default;
  constexpr BitPattern(std::uint32_t value, int width) : value_(value), width_(width) {
    if (width < 1 || width > kMaxParties) throw std::invalid_argument("BitPattern: width out of range");
    if (value >= (std::uint32_t{1} << width)) throw std::invalid_argument("BitPattern: value exceeds width");
  }

  static BitPattern zeros(int width) { return {0, width}; }
  static BitPattern ones(int width) { return {full_mask(width), width}; }

  /// Parses a string such as "101" (Bob_1 first).
  static BitPattern parse(std::string_view bits) {
    if (bits.empty() || bits.size() > static_cast<std::size_t>(kMaxParties))
      throw std::invalid_argument("BitPattern: bad length in '" + std::string(bits) + "'");
    std::uint32_t v = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') throw std::invalid_argument("BitPattern: non-binary character in '" + std::string(bits) + "'");
      v = (v << 1) | static_cast<std::uint32_t>(c - '0');
    }
    return {v, static_cast<int>(bits.size())};
  }

  constexpr std::uint32_t value() const { return value_; }
  constexpr int width() const { return width_; }

  /// Bob_j's bit, j in [1, width].
  bool bob(int j) const {
    if (j < 1 || j > width_) throw std::out_of_range("BitPattern: Bob index out of range");
    return (value_ >> (width_ - j)) & 1U;
  }

  int popcount() const { return std::popcount(value_); }
  BitPattern complement() const { return {value_ ^ full_mask(width_), width_}; }

  BitPattern operator^(BitPattern o) const { return {value_ ^ o.value_, check_width(o)}; }
  BitPattern operator&(BitPattern o) const { return {value_ & o.value_, check_width(o)}; }
  BitPattern operator|(BitPattern o) const { return {value_ | o.value_, check_width(o)}; }

  /// True when every set bit of `o` is also set here.
  bool contains(BitPattern o) const {
    check_width(o);
    return (value_ & o.value_) == o.value_;
  }

  std::string to_string() const {
    std::string s(static_cast<std::size_t>(width_), '0');
    for (int j = 1; j <= width_; ++j)
      if (bob(j)) s[static_cast<std::size_t>(j - 1)] = '1';
    return s;
  }

  friend constexpr bool operator==(BitPattern, BitPattern) = default;
  friend constexpr auto operator<=>(BitPattern a, BitPattern b) { return a.value_ <=> b.value_; }

  static constexpr std::uint32_t full_mask(int width) {
    return width >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << width) - 1U;
  }

 private:
  int check_width(BitPattern o) const {
    if (o.width_ != width_) throw std::invalid_argument("BitPattern: width mismatch");
    return width_;
  }

  std::uint32_t value_ = 0;
  int width_ = 1;
};

inline void check_party_count(int p) {
  if (p < 1 || p > kMaxParties)
    throw std::invalid_argument("party count must be in [1, " + std::to_string(kMaxParties) + "], got " + std::to_string(p));
}

/// All 2^p patterns in ascending numeric order.
inline std::vector<BitPattern> enumerate_patterns(int p) {
  check_party_count(p);
  const std::uint32_t n = std::uint32_t{1} << p;
  std::vector<BitPattern> out;
  out.reserve(n);
  for (std::uint32_t v = 0; v < n; ++v) out.emplace_back(v, p);
  return out;
}

/// Clamps x into [0,1] if it lies within kProbabilitySlack of the interval,
/// otherwise throws std::domain_error.
inline double clamp_probability(double x, const char* what = "probability") {
  if (!(x >= -kProbabilitySlack && x <= 1.0 + kProbabilitySlack))
    throw std::domain_error(std::string(what) + " outside [0,1]: " + std::to_string(x));
  return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

/// Binary Shannon entropy in bits, with h(0) = h(1) = 0.
inline double binary_entropy(double x) {
  x = clamp_probability(x, "binary_entropy argument");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

}  // namespace scad
