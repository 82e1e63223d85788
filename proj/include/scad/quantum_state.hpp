#pragma once

// Dense state vectors and density matrices over named qubit registers.
//
// A RegisterMap lists registers in tensor-product order: the first register
// holds the most significant bits of the basis index. Inside a register,
// qubit 0 is the most significant bit of the register's value, so a p-bit
// register holding BitPattern x stores Bob_j's qubit at position j-1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scad::quantum {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPsdSlack = -1e-10;
inline constexpr double kEigenvalueFloor = 1e-14;
inline constexpr int kMaxQubits = 26;

struct Register {
  std::string name;
  int width;
  friend bool operator==(const Register&, const Register&) = default;
};

/// A qubit addressed as (register name, position inside the register).
struct Qubit {
  std::string reg;
  int index = 0;
  friend bool operator==(const Qubit&, const Qubit&) = default;
};

class RegisterMap {
 public:
  RegisterMap() = default;
  RegisterMap(std::initializer_list<Register> regs) : RegisterMap(std::vector<Register>(regs)) {}
  explicit RegisterMap(std::vector<Register> regs) : regs_(std::move(regs)) {
    for (std::size_t i = 0; i < regs_.size(); ++i) {
      if (regs_[i].width < 1) throw std::invalid_argument("register '" + regs_[i].name + "' has no qubits");
      for (std::size_t k = 0; k < i; ++k)
        if (regs_[k].name == regs_[i].name) throw std::invalid_argument("duplicate register '" + regs_[i].name + "'");
      qubits_ += regs_[i].width;
    }
    if (qubits_ > kMaxQubits) throw std::invalid_argument("state too large: " + std::to_string(qubits_) + " qubits");
  }

  const std::vector<Register>& registers() const { return regs_; }
  int qubits() const { return qubits_; }
  std::size_t dimension() const { return std::size_t{1} << qubits_; }

  bool contains(const std::string& name) const {
    return std::any_of(regs_.begin(), regs_.end(), [&](const Register& r) { return r.name == name; });
  }

  int width(const std::string& name) const { return regs_[find(name)].width; }

  /// Bit offset of the register's least significant qubit in the basis index.
  int shift(const std::string& name) const {
    int s = 0;
    for (std::size_t i = regs_.size(); i-- > 0;) {
      if (regs_[i].name == name) return s;
      s += regs_[i].width;
    }
    throw std::invalid_argument("no register named '" + name + "'");
  }

  /// Bit position of a qubit in the basis index.
  int bit(const Qubit& q) const {
    const int w = width(q.reg);
    if (q.index < 0 || q.index >= w) throw std::out_of_range("qubit " + q.reg + "[" + std::to_string(q.index) + "] out of range");
    return shift(q.reg) + (w - 1 - q.index);
  }

  /// Index mask covering a register.
  std::size_t mask(const std::string& name) const { return ((std::size_t{1} << width(name)) - 1) << shift(name); }

  std::uint32_t value(std::size_t index, const std::string& name) const {
    return static_cast<std::uint32_t>((index >> shift(name)) & ((std::size_t{1} << width(name)) - 1));
  }

  /// Basis index with the given register values; unnamed registers are 0.
  std::size_t index(std::initializer_list<std::pair<std::string, std::uint32_t>> values) const {
    std::size_t out = 0;
    for (const auto& [name, v] : values) {
      if (v >= (std::uint32_t{1} << width(name))) throw std::invalid_argument("value too large for register '" + name + "'");
      out |= static_cast<std::size_t>(v) << shift(name);
    }
    return out;
  }

  RegisterMap renamed(const std::string& from, const std::string& to) const {
    auto regs = regs_;
    regs[find(from)].name = to;
    return RegisterMap(std::move(regs));
  }

  RegisterMap with_suffix(const std::string& suffix) const {
    auto regs = regs_;
    for (auto& r : regs) r.name += suffix;
    return RegisterMap(std::move(regs));
  }

  /// Registers in `keep`, in this map's order.
  RegisterMap subset(const std::vector<std::string>& keep) const {
    for (const auto& k : keep) find(k);
    std::vector<Register> regs;
    for (const auto& r : regs_)
      if (std::find(keep.begin(), keep.end(), r.name) != keep.end()) regs.push_back(r);
    return RegisterMap(std::move(regs));
  }

  friend RegisterMap operator+(const RegisterMap& a, const RegisterMap& b) {
    auto regs = a.regs_;
    regs.insert(regs.end(), b.regs_.begin(), b.regs_.end());
    return RegisterMap(std::move(regs));
  }

  friend bool operator==(const RegisterMap&, const RegisterMap&) = default;

 private:
  std::size_t find(const std::string& name) const {
    for (std::size_t i = 0; i < regs_.size(); ++i)
      if (regs_[i].name == name) return i;
    throw std::invalid_argument("no register named '" + name + "'");
  }

  std::vector<Register> regs_;
  int qubits_ = 0;
};

namespace detail {

/// For a split of the registers into kept and traced parts: the partial
/// basis index contributed by every kept value and every traced value.
struct IndexSplit {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> traced;
};

inline std::vector<std::size_t> scatter_table(const RegisterMap& map, const std::vector<Register>& regs) {
  std::vector<std::size_t> table{0};
  for (const auto& r : regs) {
    const int s = map.shift(r.name);
    std::vector<std::size_t> next;
    next.reserve(table.size() << r.width);
    for (std::size_t base : table)
      for (std::size_t v = 0; v < (std::size_t{1} << r.width); ++v) next.push_back(base | (v << s));
    table.swap(next);
  }
  // Entries were generated most significant register first with the last
  // register varying fastest, which matches the packed order of a submap.
  return table;
}

inline IndexSplit split(const RegisterMap& map, const RegisterMap& kept) {
  std::vector<Register> traced;
  for (const auto& r : map.registers())
    if (!kept.contains(r.name)) traced.push_back(r);
  return {scatter_table(map, kept.registers()), scatter_table(map, traced)};
}

}  // namespace detail

class DensityState;

class PureState {
 public:
  PureState(RegisterMap map, Vector amp) : map_(std::move(map)), amp_(std::move(amp)) {
    if (static_cast<std::size_t>(amp_.size()) != map_.dimension()) throw std::invalid_argument("PureState: amplitude count does not match registers");
  }

  /// |0...0> on the given registers.
  static PureState zeros(RegisterMap map) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(map.dimension()));
    v(0) = 1.0;
    return {std::move(map), std::move(v)};
  }

  const RegisterMap& registers() const { return map_; }
  const Vector& amplitudes() const { return amp_; }
  Vector& amplitudes() { return amp_; }
  Complex amplitude(std::size_t i) const { return amp_(static_cast<Eigen::Index>(i)); }

  double norm() const { return amp_.norm(); }
  bool normalized(double tol = kNormTolerance) const { return std::abs(amp_.squaredNorm() - 1.0) <= tol; }
  void check_normalized(double tol = kNormTolerance) const {
    if (!normalized(tol)) throw std::invalid_argument("PureState: squared norm " + std::to_string(amp_.squaredNorm()) + " is not 1");
  }

  PureState renamed(const std::string& from, const std::string& to) const { return {map_.renamed(from, to), amp_}; }
  PureState with_suffix(const std::string& s) const { return {map_.with_suffix(s), amp_}; }

  /// Reduced density matrix on `keep` (registers in this state's order).
  DensityState reduce(const std::vector<std::string>& keep) const;

 private:
  RegisterMap map_;
  Vector amp_;
};

class DensityState {
 public:
  DensityState(RegisterMap map, Matrix rho) : map_(std::move(map)), rho_(std::move(rho)) {
    const auto n = static_cast<Eigen::Index>(map_.dimension());
    if (rho_.rows() != n || rho_.cols() != n) throw std::invalid_argument("DensityState: matrix size does not match registers");
  }

  static DensityState from_pure(const PureState& s) {
    return {s.registers(), s.amplitudes() * s.amplitudes().adjoint()};
  }

  const RegisterMap& registers() const { return map_; }
  const Matrix& matrix() const { return rho_; }
  double trace() const { return rho_.trace().real(); }

  /// Checks unit trace, Hermiticity and eigenvalues >= kPsdSlack.
  void validate() const {
    if (std::abs(trace() - 1.0) > kTraceTolerance) throw std::invalid_argument("DensityState: trace " + std::to_string(trace()));
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("DensityState: not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdSlack) throw std::invalid_argument("DensityState: negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
  }

  DensityState partial_trace(const std::vector<std::string>& keep) const {
    const RegisterMap kept = map_.subset(keep);
    const auto sp = detail::split(map_, kept);
    const auto nk = static_cast<Eigen::Index>(sp.kept.size());
    Matrix out = Matrix::Zero(nk, nk);
    for (std::size_t t : sp.traced)
      for (Eigen::Index c = 0; c < nk; ++c)
        for (Eigen::Index r = 0; r < nk; ++r)
          out(r, c) += rho_(static_cast<Eigen::Index>(sp.kept[static_cast<std::size_t>(r)] | t), static_cast<Eigen::Index>(sp.kept[static_cast<std::size_t>(c)] | t));
    return {kept, std::move(out)};
  }

  /// Measures a register in the computational basis without recording the
  /// outcome: zeroes every coherence between different register values.
  DensityState dephased(const std::string& reg) const {
    const std::size_t m = map_.mask(reg);
    Matrix out = rho_;
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      for (Eigen::Index r = 0; r < out.rows(); ++r)
        if ((static_cast<std::size_t>(r) & m) != (static_cast<std::size_t>(c) & m)) out(r, c) = 0.0;
    return {map_, std::move(out)};
  }

  /// Post-measurement state for outcome `value` of `reg`, with the register
  /// traced out, and the outcome probability.
  std::pair<DensityState, double> conditioned(const std::string& reg, std::uint32_t value) const {
    std::vector<std::string> rest;
    for (const auto& r : map_.registers())
      if (r.name != reg) rest.push_back(r.name);
    const RegisterMap kept = map_.subset(rest);
    const auto sp = detail::split(map_, kept);
    const std::size_t off = static_cast<std::size_t>(value) << map_.shift(reg);
    const auto nk = static_cast<Eigen::Index>(sp.kept.size());
    Matrix out(nk, nk);
    for (Eigen::Index c = 0; c < nk; ++c)
      for (Eigen::Index r = 0; r < nk; ++r)
        out(r, c) = rho_(static_cast<Eigen::Index>(sp.kept[static_cast<std::size_t>(r)] | off), static_cast<Eigen::Index>(sp.kept[static_cast<std::size_t>(c)] | off));
    const double prob = out.trace().real();
    if (prob <= 0.0) throw std::domain_error("conditioning on an outcome of probability zero");
    out /= prob;
    return {DensityState(kept, std::move(out)), prob};
  }

  DensityState renamed(const std::string& from, const std::string& to) const { return {map_.renamed(from, to), rho_}; }

 private:
  RegisterMap map_;
  Matrix rho_;
};

inline DensityState PureState::reduce(const std::vector<std::string>& keep) const {
  const RegisterMap kept = map_.subset(keep);
  const auto sp = detail::split(map_, kept);
  Matrix psi(static_cast<Eigen::Index>(sp.kept.size()), static_cast<Eigen::Index>(sp.traced.size()));
  for (std::size_t t = 0; t < sp.traced.size(); ++t)
    for (std::size_t k = 0; k < sp.kept.size(); ++k)
      psi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = amp_(static_cast<Eigen::Index>(sp.kept[k] | sp.traced[t]));
  return {kept, psi * psi.adjoint()};
}

inline PureState kron(const PureState& a, const PureState& b) {
  const Vector& va = a.amplitudes();
  const Vector& vb = b.amplitudes();
  Vector out(va.size() * vb.size());
  for (Eigen::Index i = 0; i < va.size(); ++i) out.segment(i * vb.size(), vb.size()) = va(i) * vb;
  return {a.registers() + b.registers(), std::move(out)};
}

/// <a|b>; both states must use the same register layout.
inline Complex overlap(const PureState& a, const PureState& b) {
  if (!(a.registers() == b.registers())) throw std::invalid_argument("overlap: register layouts differ");
  return a.amplitudes().dot(b.amplitudes());
}

/// CNOT; a no-op on the amplitude norm.
inline PureState cnot(PureState s, const Qubit& control, const Qubit& target) {
  if (control == target) throw std::invalid_argument("cnot: control and target coincide");
  const std::size_t c = std::size_t{1} << s.registers().bit(control);
  const std::size_t t = std::size_t{1} << s.registers().bit(target);
  Vector& v = s.amplitudes();
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()); ++i)
    if ((i & c) && !(i & t)) std::swap(v(static_cast<Eigen::Index>(i)), v(static_cast<Eigen::Index>(i | t)));
  return s;
}

/// Double-control NOT: |x, y, z> -> |x, y, z XOR x XOR y>, as two CNOTs.
inline PureState dcnot(PureState s, const Qubit& c1, const Qubit& c2, const Qubit& target) {
  if (c1 == c2 || c1 == target || c2 == target) throw std::invalid_argument("dcnot: qubit labels must be distinct");
  return cnot(cnot(std::move(s), c1, target), c2, target);
}

/// Von Neumann entropy in bits. Eigenvalues below kEigenvalueFloor count
/// as zero; anything below kPsdSlack is rejected.
inline double von_neumann_entropy(const Matrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  double h = 0.0;
  for (double l : es.eigenvalues()) {
    if (l < kPsdSlack) throw std::domain_error("von_neumann_entropy: matrix is not positive semidefinite (eigenvalue " + std::to_string(l) + ")");
    if (l > kEigenvalueFloor) h -= l * std::log2(l);
  }
  return h;
}

/// H(target | side) = H(target side) - H(side).
inline double conditional_entropy(const DensityState& rho, const std::vector<std::string>& target, const std::vector<std::string>& side) {
  for (const auto& t : target)
    if (std::find(side.begin(), side.end(), t) != side.end()) throw std::invalid_argument("conditional_entropy: register '" + t + "' on both sides");
  std::vector<std::string> joint = target;
  joint.insert(joint.end(), side.begin(), side.end());
  const double h_joint = von_neumann_entropy(rho.partial_trace(joint).matrix());
  const double h_side = side.empty() ? 0.0 : von_neumann_entropy(rho.partial_trace(side).matrix());
  return h_joint - h_side;
}

inline double conditional_entropy(const DensityState& rho, const std::string& target, const std::vector<std::string>& side) {
  return conditional_entropy(rho, std::vector<std::string>{target}, side);
}

}  // namespace scad::quantum
