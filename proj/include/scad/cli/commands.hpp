#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "scad/cli/csv.hpp"
#include "scad/cli/scenario_spec.hpp"
#include "scad/keyrate.hpp"
#include "scad/protocol_sim.hpp"
#include "scad/quantum_oracle.hpp"

namespace scad::cli {

using quantum::AttackState;

/// Runs fn(0..n-1) on up to `jobs` threads. The first exception thrown by
/// any task is rethrown after all threads finish.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- sweep

struct SweepRow {
  double q;
  KeyRateReport report;
};

inline const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> h{"Q", "mask", "p_accept", "entropy_bound", "leak_ec", "rate_raw", "rate_clamped", "baseline_rate"};
  return h;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  write_csv_line(out, sweep_header());
  for (const auto& r : rows) {
    const auto& k = r.report;
    write_csv_line(out, {format_number(r.q), k.mask.to_string(), format_number(k.p_accept), format_number(k.entropy_bound), format_number(k.leak_ec),
                         format_number(k.rate), format_number(std::max(0.0, k.rate)), format_number(k.baseline_rate)});
  }
}

/// One row per (Q, mask), Q ascending then mask ascending.
inline std::vector<SweepRow> run_sweep(const ScenarioSpec& spec, const NuOptimizerOptions& opt = {}, int jobs = 1) {
  const auto qs = spec.grid.points();
  const auto masks = spec.sweep_masks();
  std::vector<SweepRow> rows(qs.size() * masks.size(), SweepRow{0.0, KeyRateReport{.mask = CadMask::none(spec.p)}});
  parallel_for(qs.size(), jobs, [&](std::size_t i) {
    const auto d = distribution_from_scenario(spec.scenario_at(qs[i]));
    for (std::size_t m = 0; m < masks.size(); ++m) rows[i * masks.size() + m] = {qs[i], evaluate_mask(d, masks[m], opt)};
  });
  return rows;
}

/// One row per Q holding the best of all 2^p masks.
inline std::vector<SweepRow> run_search(const ScenarioSpec& spec, const NuOptimizerOptions& opt = {}, int jobs = 1) {
  const auto qs = spec.grid.points();
  std::vector<SweepRow> rows(qs.size(), SweepRow{0.0, KeyRateReport{.mask = CadMask::none(spec.p)}});
  parallel_for(qs.size(), jobs, [&](std::size_t i) { rows[i] = {qs[i], best_mask(distribution_from_scenario(spec.scenario_at(qs[i])), opt).second}; });
  return rows;
}

// ---------------------------------------------------------------- checks

struct CheckRow {
  std::string check;
  std::string subject;
  std::string mask;
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  int within = 0;
  int runs = 0;
  bool pass = false;
};

struct CheckReport {
  std::vector<CheckRow> rows;
  std::vector<std::string> notices;

  bool passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
  }
};

inline void write_check_report(std::ostream& out, const CheckReport& rep) {
  for (const auto& n : rep.notices) out << "# " << n << '\n';
  write_csv_line(out, {"check", "subject", "mask", "observed", "expected", "tolerance", "within", "runs", "status"});
  for (const auto& r : rep.rows)
    write_csv_line(out, {r.check, r.subject, r.mask, format_number(r.observed), format_number(r.expected), format_number(r.tolerance), std::to_string(r.within),
                         std::to_string(r.runs), r.pass ? "PASS" : "FAIL"});
}

struct ValidateOptions {
  std::uint64_t rounds = 2'000'000;
  int seeds = 1;
  std::uint64_t seed = 1;
  int attacks = 10;
  int jobs = 1;
  /// Fraction of seeds that must land within 3 sigma.
  double required_fraction = 0.97;
  /// Test hook: added to every analytic value before comparison.
  double analytic_offset = 0.0;
  NuOptimizerOptions optimizer{};
};

/// Seeds needed to pass a statistical check run over `seeds` seeds.
inline int required_within(int seeds, double fraction) {
  return static_cast<int>(std::ceil(fraction * seeds - 1e-9));
}

namespace detail {

/// |estimate - expected| <= 3 sigma; a zero sigma demands equality.
inline bool within_3_sigma(double estimate, double expected, double sigma) {
  if (sigma == 0.0) return std::abs(estimate - expected) <= 1e-12;
  return std::abs(estimate - expected) <= 3.0 * sigma;
}

inline AttackState random_attack(int p, std::mt19937_64& rng) {
  std::vector<double> w(std::size_t{1} << (p + 1));
  std::exponential_distribution<double> e(1.0);
  double total = 0.0;
  for (auto& v : w) total += (v = e(rng));
  for (auto& v : w) v /= total;
  return {p, std::move(w)};
}

}  // namespace detail

/// Soundness, acceptance and internal-consistency checks of one attack.
inline void oracle_checks(const AttackState& a, const CadMask& mask, const std::string& subject, const NuOptimizerOptions& opt, double offset,
                          std::vector<CheckRow>& out) {
  const auto d = a.error_distribution();
  const auto cs = quantum::conditioned_rho_aem(a, mask);
  const double exact = quantum::conditional_entropy(cs.rho, "A", {"EL", "ER", "M"});
  const double pa = p_accept(d, mask) + offset;
  out.push_back({"oracle_p_accept", subject, mask.to_string(), cs.p_accept, pa, 1e-10, 0, 1, std::abs(cs.p_accept - pa) <= 1e-10});
  const double bound = entropy_bound(d, mask, opt).value + offset;
  out.push_back({"oracle_soundness", subject, mask.to_string(), exact, bound, 1e-9, 0, 1, exact >= bound - 1e-9});
  const auto nu = a.nu();
  const auto terms = quantum::attack_theorem1_terms(d, mask, nu);
  const double t1 = quantum::theorem1_bound(terms, 2.0 * p_accept(d, mask));
  const double obj = entropy_objective(d, mask, nu) + offset;
  out.push_back({"oracle_entropy_formula", subject, mask.to_string(), t1, obj, 1e-10, 0, 1, std::abs(t1 - obj) <= 1e-10});
  const auto [rho0, p0] = cs.rho.conditioned("M", 0);
  const auto [rho1, p1] = cs.rho.conditioned("M", 1);
  const double h0 = quantum::conditional_entropy(rho0, "A", {"EL", "ER"});
  const double h1 = quantum::conditional_entropy(rho1, "A", {"EL", "ER"});
  out.push_back({"oracle_message_symmetry", subject, mask.to_string(), h0, h1, 1e-10, 0, 1, std::abs(h0 - h1) <= 1e-10});
  (void)p0;
  (void)p1;
}

/// Monte Carlo and oracle validation of every grid point and nonzero mask.
inline CheckReport run_validate(const ScenarioSpec& spec, const ValidateOptions& o) {
  if (o.rounds < 2 || o.rounds % 2) throw std::invalid_argument("rounds must be even and at least 2");
  if (o.seeds < 1) throw std::invalid_argument("seeds must be at least 1");
  CheckReport rep;
  std::vector<CadMask> masks;
  for (const auto& m : spec.sweep_masks())
    if (!m.is_none()) masks.push_back(m);
  if (masks.empty()) {
    rep.notices.push_back("no nonzero mask in the scenario file; nothing to validate");
    return rep;
  }
  const auto qs = spec.grid.points();
  const int need = required_within(o.seeds, o.required_fraction);

  std::vector<std::vector<CheckRow>> per_point(qs.size() * masks.size());
  parallel_for(per_point.size(), o.jobs, [&](std::size_t idx) {
    const double q = qs[idx / masks.size()];
    const CadMask& mask = masks[idx % masks.size()];
    const NoiseScenario sc = spec.scenario_at(q);
    const auto d = distribution_from_scenario(sc);
    const double pa = p_accept(d, mask) + o.analytic_offset;
    std::vector<double> post(static_cast<std::size_t>(spec.p));
    for (int j = 1; j <= spec.p; ++j) post[static_cast<std::size_t>(j - 1)] = conditional_post_cad_error(d, mask, j) + o.analytic_offset;

    int pa_within = 0;
    double pa_sum = 0.0, pa_sigma = 0.0;
    std::vector<int> post_within(post.size(), 0), post_runs(post.size(), 0);
    std::vector<double> post_sum(post.size(), 0.0), post_sigma(post.size(), 0.0);
    for (int s = 0; s < o.seeds; ++s) {
      const SimResult r = run_sim({sc, mask, o.rounds, o.seed + static_cast<std::uint64_t>(s)});
      pa_sum += r.p_accept_hat;
      pa_sigma += r.stderr_p_accept;
      pa_within += detail::within_3_sigma(r.p_accept_hat, pa, r.stderr_p_accept);
      if (!r.post_error_defined()) continue;
      for (std::size_t j = 0; j < post.size(); ++j) {
        const double sig = r.stderr_post_error(static_cast<int>(j) + 1);
        ++post_runs[j];
        post_sum[j] += r.post_error_hat[j];
        post_sigma[j] += sig;
        post_within[j] += detail::within_3_sigma(r.post_error_hat[j], post[j], sig);
      }
    }
    const std::string subject = "Q=" + format_number(q);
    auto& rows = per_point[idx];
    rows.push_back({"mc_p_accept", subject, mask.to_string(), pa_sum / o.seeds, pa, 3.0 * pa_sigma / o.seeds, pa_within, o.seeds, pa_within >= need});
    for (std::size_t j = 0; j < post.size(); ++j) {
      const int runs = post_runs[j];
      const bool ok = runs > 0 && post_within[j] >= required_within(runs, o.required_fraction);
      rows.push_back({"mc_post_error_bob" + std::to_string(j + 1), subject, mask.to_string(), runs ? post_sum[j] / runs : 0.0, post[j],
                      runs ? 3.0 * post_sigma[j] / runs : 0.0, post_within[j], runs, ok});
    }
  });
  for (auto& v : per_point) rep.rows.insert(rep.rows.end(), v.begin(), v.end());

  if (spec.p > quantum::kOracleMaxParties) {
    rep.notices.push_back("oracle checks skipped: p = " + std::to_string(spec.p) + " exceeds 3");
    return rep;
  }
  std::mt19937_64 rng(o.seed);
  std::vector<AttackState> attacks;
  for (int k = 0; k < o.attacks; ++k) attacks.push_back(detail::random_attack(spec.p, rng));
  std::vector<std::vector<CheckRow>> per_attack(attacks.size());
  parallel_for(attacks.size(), o.jobs, [&](std::size_t k) {
    for (const auto& m : masks) oracle_checks(attacks[k], m, "attack " + std::to_string(k), o.optimizer, o.analytic_offset, per_attack[k]);
  });
  for (auto& v : per_attack) rep.rows.insert(rep.rows.end(), v.begin(), v.end());
  return rep;
}

// ---------------------------------------------------------------- oracle

struct AttackSpec {
  AttackState attack;
  std::vector<CadMask> masks;
};

/// Attack file:
///   p: 2
///   masks: ["11", "10"]
///   lambdas:            # absent (delta, y) pairs have weight 0
///     - {delta: "00", y: 0, weight: 0.8}
///     - {delta: "01", y: 1, weight: 0.2}
inline AttackSpec parse_attack_spec(const YAML::Node& root) {
  using namespace detail;
  if (!root.IsMap()) throw ConfigError("attack file must be a mapping with p, masks and lambdas", line_of(root));
  check_keys(root, {"p", "masks", "lambdas"}, "attack file");
  const YAML::Node pn = require(root, "p", "attack file");
  const int p = scalar<int>(pn, "p");
  if (p < 1 || p > quantum::kOracleMaxParties) throw ConfigError("p must be in [1, 3] for the oracle", line_of(pn));

  std::vector<double> w(std::size_t{1} << (p + 1), 0.0);
  const YAML::Node ls = require(root, "lambdas", "attack file");
  if (!ls.IsSequence() || ls.size() == 0) throw ConfigError("lambdas must be a nonempty list", line_of(ls));
  for (const auto& e : ls) {
    if (!e.IsMap()) throw ConfigError("each lambda entry must be a mapping {delta, y, weight}", line_of(e));
    check_keys(e, {"delta", "y", "weight"}, "lambda entry");
    const auto ds = scalar<std::string>(require(e, "delta", "lambda entry"), "delta");
    if (static_cast<int>(ds.size()) != p) throw ConfigError("delta '" + ds + "' must have " + std::to_string(p) + " bits", line_of(e["delta"]));
    BitPattern delta;
    try {
      delta = BitPattern::parse(ds);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what(), line_of(e["delta"]));
    }
    const int y = scalar<int>(require(e, "y", "lambda entry"), "y");
    if (y != 0 && y != 1) throw ConfigError("y must be 0 or 1", line_of(e["y"]));
    const double weight = finite(require(e, "weight", "lambda entry"), "weight");
    if (weight < 0.0) throw ConfigError("weights must be nonnegative", line_of(e["weight"]));
    w[(std::size_t{delta.value()} << 1) | static_cast<std::size_t>(y)] += weight;
  }

  std::vector<CadMask> masks;
  const YAML::Node ms = require(root, "masks", "attack file");
  if (!ms.IsSequence() || ms.size() == 0) throw ConfigError("masks must be a nonempty list", line_of(ms));
  for (const auto& m : ms) {
    const auto s = scalar<std::string>(m, "mask");
    if (static_cast<int>(s.size()) != p) throw ConfigError("mask '" + s + "' must have " + std::to_string(p) + " bits", line_of(m));
    try {
      const CadMask mask = CadMask::parse(s);
      if (mask.is_none()) throw ConfigError("the oracle needs nonzero masks", line_of(m));
      masks.push_back(mask);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what(), line_of(m));
    }
  }
  try {
    return {AttackState(p, std::move(w)), std::move(masks)};
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what(), line_of(ls));
  }
}

inline AttackSpec load_attack_spec(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError(path + ": cannot open file", 0);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg, e.mark.line + 1);
  }
  try {
    return parse_attack_spec(root);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ":" + std::to_string(e.line()) + ": " + e.what(), e.line());
  }
}

inline CheckReport run_oracle(const AttackSpec& spec, const NuOptimizerOptions& opt = {}) {
  CheckReport rep;
  for (const auto& m : spec.masks) oracle_checks(spec.attack, m, "attack", opt, 0.0, rep.rows);
  return rep;
}

}  // namespace scad::cli
