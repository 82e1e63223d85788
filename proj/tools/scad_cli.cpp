// scad: key-rate sweeps, mask search, Monte Carlo validation and exact
// oracle checks for S-CAD conference key agreement.
//
// Exit status: 0 success, 1 a validation check failed, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <thread>

#include "scad/cli/commands.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

/// Writes through `emit` to `path`, or to stdout when path is empty or "-".
template <class F>
void with_output(const std::string& path, F&& emit) {
  if (path.empty() || path == "-") {
    emit(std::cout);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit(f);
  f.close();
  if (!f) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"S-CAD key-rate analysis"};
  app.require_subcommand(1);

  std::string spec_path, out_path;
  std::uint64_t seed = 1;
  std::uint64_t rounds = 2'000'000;
  int seeds = 1;
  int attacks = 10;
  double analytic_offset = 0.0;
  int jobs = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out,-o", out_path, "output file (default: stdout)");
    sub->add_option("--seed", seed, "seed for the optimizer starts, simulations and random attacks");
    sub->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* sweep = app.add_subcommand("sweep", "key rate for every (Q, mask) of a scenario spec, as CSV");
  sweep->add_option("spec", spec_path, "scenario spec (YAML)")->required();
  add_common(sweep);

  auto* search = app.add_subcommand("search", "best CAD mask at every Q of a scenario spec, as CSV");
  search->add_option("spec", spec_path, "scenario spec (YAML)")->required();
  add_common(search);

  auto* validate = app.add_subcommand("validate", "Monte Carlo and oracle checks of the analytic formulas");
  validate->add_option("spec", spec_path, "scenario spec (YAML)")->required();
  validate->add_option("--rounds", rounds, "rounds per simulation (even)");
  validate->add_option("--seeds", seeds, "simulations per grid point and mask")->check(CLI::PositiveNumber);
  validate->add_option("--attacks", attacks, "random attacks for the oracle checks (p <= 3)")->check(CLI::NonNegativeNumber);
  validate->add_option("--analytic-offset", analytic_offset, "self-test: shift every analytic value before comparing");
  add_common(validate);

  auto* oracle = app.add_subcommand("oracle", "exact entropy checks of an explicit attack");
  oracle->add_option("attack", spec_path, "attack file (YAML)")->required();
  add_common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  scad::NuOptimizerOptions opt;
  opt.seed ^= seed;

  try {
    if (sweep->parsed() || search->parsed()) {
      const auto spec = scad::cli::load_scenario_spec(spec_path);
      const auto rows = sweep->parsed() ? scad::cli::run_sweep(spec, opt, jobs) : scad::cli::run_search(spec, opt, jobs);
      with_output(out_path, [&](std::ostream& o) { scad::cli::write_sweep_csv(o, rows); });
      return kExitOk;
    }
    scad::cli::CheckReport report;
    if (validate->parsed()) {
      const auto spec = scad::cli::load_scenario_spec(spec_path);
      scad::cli::ValidateOptions vo;
      vo.rounds = rounds;
      vo.seeds = seeds;
      vo.seed = seed;
      vo.attacks = attacks;
      vo.jobs = jobs;
      vo.analytic_offset = analytic_offset;
      vo.optimizer = opt;
      if (rounds < 2 || rounds % 2) {
        std::cerr << "error: --rounds must be even and at least 2\n";
        return kExitUsage;
      }
      report = scad::cli::run_validate(spec, vo);
    } else {
      report = scad::cli::run_oracle(scad::cli::load_attack_spec(spec_path), opt);
    }
    with_output(out_path, [&](std::ostream& o) { scad::cli::write_check_report(o, report); });
    for (const auto& n : report.notices) std::cerr << "note: " << n << '\n';
    if (!report.passed()) {
      std::cerr << "validation failed\n";
      return kExitCheckFailed;
    }
    return kExitOk;
  } catch (const scad::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
