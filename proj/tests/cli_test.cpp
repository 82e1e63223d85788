#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "scad/cli/commands.hpp"

using namespace scad;
using namespace scad::cli;
namespace fs = std::filesystem;

namespace {

const char* kP2Spec = R"(scenario:
  name: t
  p: 2
  link_multipliers: [1, 1]
  qx: equal_to_q
grid:
  start: 0.0
  stop: 0.2
  step: 0.05
masks: ["11", "01", "11"]
)";

int line_of_error(const std::string& text) {
  try {
    parse_scenario_spec_text(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string csv_of(const std::vector<SweepRow>& rows) {
  std::ostringstream s;
  write_sweep_csv(s, rows);
  return s.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(split_csv_line(line));
  return out;
}

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("scad_cli_test_" + std::to_string(::getpid()) + "_" + name);
  std::ofstream(p) << content;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCAD_CLI_BINARY) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(ScenarioSpecParse, ReadsFieldsAndNormalisesMasks) {
  const auto s = parse_scenario_spec_text(kP2Spec);
  EXPECT_EQ(s.name, "t");
  EXPECT_EQ(s.p, 2);
  EXPECT_FALSE(s.qx.has_value());
  ASSERT_EQ(s.masks.size(), 2u);
  EXPECT_EQ(s.masks[0].to_string(), "01");
  EXPECT_EQ(s.masks[1].to_string(), "11");
  EXPECT_EQ(s.grid.points().size(), 5u);
  EXPECT_NEAR(s.grid.points().back(), 0.2, 1e-15);
}

TEST(ScenarioSpecParse, AllAndBestTokens) {
  std::string text = kP2Spec;
  text.replace(text.find("masks:"), std::string::npos, "masks: [all]\n");
  EXPECT_EQ(parse_scenario_spec_text(text).masks.size(), 4u);
  text.replace(text.find("masks:"), std::string::npos, "masks: [best]\n");
  const auto s = parse_scenario_spec_text(text);
  EXPECT_TRUE(s.best);
  EXPECT_EQ(s.sweep_masks().size(), 4u);
}

TEST(ScenarioSpecParse, ErrorsCarryLineNumbers) {
  std::string text = kP2Spec;
  EXPECT_EQ(line_of_error(std::string(kP2Spec).replace(text.find("masks:"), std::string::npos, "masks: []\n")), 10);
  EXPECT_EQ(line_of_error(std::string(kP2Spec).replace(text.find("[1, 1]"), 6, "[1, 1, 1]")), 4);
  EXPECT_EQ(line_of_error(std::string(kP2Spec).replace(text.find("0.2"), 3, "0.5")), 8);
  EXPECT_EQ(line_of_error(std::string(kP2Spec).replace(text.find("\"01\""), 4, "\"0x\"")), 10);
  EXPECT_EQ(line_of_error(std::string(kP2Spec).replace(text.find("  qx"), 0, "  colour: red\n")), 5);
  EXPECT_EQ(line_of_error(std::string(kP2Spec).replace(text.find("0.05"), 4, "-1")), 9);
}

TEST(ScenarioSpecParse, FileErrorsArePrefixedWithPathAndLine) {
  const auto p = temp_file("bad.yaml", std::string(kP2Spec).replace(std::string(kP2Spec).find("masks:"), std::string::npos, "masks: []\n"));
  try {
    load_scenario_spec(p.string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind(p.string() + ":10: ", 0), 0u) << e.what();
  }
  fs::remove(p);
  EXPECT_THROW(load_scenario_spec("/nonexistent/spec.yaml"), ConfigError);
}

TEST(ScenarioSpecParse, BundledSpecsAllParse) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(SCAD_SCENARIO_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    const auto s = load_scenario_spec(entry.path().string());
    EXPECT_EQ(s.name, entry.path().stem().string());
    EXPECT_FALSE(s.grid.points().empty());
    ++count;
  }
  EXPECT_GE(count, 14);
}

TEST(CsvFormat, TenSignificantDigitsAndNoNegativeZero) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.1 + 0.2), "0.3");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(format_number(1.234e-7), "1.234e-07");
  EXPECT_EQ(split_csv_line("a,,b"), (std::vector<std::string>{"a", "", "b"}));
}

TEST(Sweep, NoiselessRowAndOrdering) {
  const auto rows = run_sweep(parse_scenario_spec_text(kP2Spec));
  ASSERT_EQ(rows.size(), 10u);
  const auto table = parse_csv(csv_of(rows));
  ASSERT_EQ(table.size(), 11u);
  EXPECT_EQ(table[0], sweep_header());
  // Q = 0, mask 11.
  EXPECT_EQ(table[2][0], "0");
  EXPECT_EQ(table[2][1], "11");
  EXPECT_EQ(table[2][6], "0.5");
  EXPECT_EQ(table[2][7], "1");
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    EXPECT_LE(rows[i - 1].q, rows[i].q);
    if (rows[i - 1].q == rows[i].q) {
      EXPECT_LT(rows[i - 1].report.mask.value(), rows[i].report.mask.value());
    }
  }
}

TEST(Sweep, ClampedColumnAndCsvContract) {
  std::string text = kP2Spec;
  text.replace(text.find("stop: 0.2"), 9, "stop: 0.45");
  const auto csv = csv_of(run_sweep(parse_scenario_spec_text(text)));
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(csv.back(), '\n');
  bool negative_seen = false;
  const auto table = parse_csv(csv);
  for (std::size_t i = 1; i < table.size(); ++i) {
    ASSERT_EQ(table[i].size(), 8u);
    const double raw = std::stod(table[i][5]), clamped = std::stod(table[i][6]);
    EXPECT_EQ(clamped, std::max(0.0, raw));
    negative_seen |= raw < 0;
    EXPECT_EQ(table[i][1].size(), 2u);
  }
  EXPECT_TRUE(negative_seen);
}

TEST(Sweep, ByteStableAcrossRunsAndJobCounts) {
  const auto spec = parse_scenario_spec_text(kP2Spec);
  const auto a = csv_of(run_sweep(spec, {}, 1));
  EXPECT_EQ(a, csv_of(run_sweep(spec, {}, 1)));
  EXPECT_EQ(a, csv_of(run_sweep(spec, {}, 4)));
}

TEST(Search, BestMaskTransitionsForOneNoisyBob) {
  const auto spec = load_scenario_spec(std::string(SCAD_SCENARIO_DIR) + "/p3_links_3_1_1.yaml");
  ScenarioSpec coarse = spec;
  coarse.grid.step = 0.005;
  const auto rows = run_search(coarse);
  std::set<std::string> seen;
  for (const auto& r : rows) seen.insert(r.report.mask.to_string());
  EXPECT_TRUE(seen.count("000"));
  EXPECT_TRUE(seen.count("100"));
  EXPECT_GE(seen.size(), 2u);
  EXPECT_EQ(rows.front().report.mask.to_string(), "000");
}

TEST(Validate, NoiselessScenarioPasses) {
  const auto spec = parse_scenario_spec_text(R"(scenario: {name: clean, p: 2, link_multipliers: [1, 1], qx: 0}
grid: {start: 0, stop: 0, step: 0.1}
masks: [all]
)");
  ValidateOptions o;
  o.rounds = 1000;
  o.seeds = 3;
  o.attacks = 2;
  const auto rep = run_validate(spec, o);
  EXPECT_TRUE(rep.passed());
  EXPECT_FALSE(rep.rows.empty());
}

TEST(Validate, CorruptedAnalyticValueFails) {
  const auto spec = load_scenario_spec(std::string(SCAD_SAMPLE_DIR) + "/validate_p2.yaml");
  ValidateOptions o;
  o.rounds = 200000;
  o.seeds = 5;
  o.attacks = 2;
  EXPECT_TRUE(run_validate(spec, o).passed());
  o.analytic_offset = 0.05;
  const auto bad = run_validate(spec, o);
  EXPECT_FALSE(bad.passed());
  std::ostringstream s;
  write_check_report(s, bad);
  EXPECT_NE(s.str().find(",FAIL\n"), std::string::npos);
}

TEST(Validate, SkipsOracleAboveThreeBobsWithNotice) {
  const auto spec = parse_scenario_spec_text(R"(scenario: {name: four, p: 4, link_multipliers: [1, 1, 1, 1]}
grid: {start: 0.05, stop: 0.05, step: 0.1}
masks: ["1111"]
)");
  ValidateOptions o;
  o.rounds = 20000;
  o.seeds = 2;
  const auto rep = run_validate(spec, o);
  ASSERT_EQ(rep.notices.size(), 1u);
  for (const auto& r : rep.rows) EXPECT_EQ(r.check.rfind("mc_", 0), 0u);
}

TEST(Oracle, SampleAttackPasses) {
  const auto a = load_attack_spec(std::string(SCAD_SAMPLE_DIR) + "/attack_p2.yaml");
  EXPECT_EQ(a.masks.size(), 2u);
  const auto rep = run_oracle(a);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.rows.size(), 8u);
}

TEST(Oracle, AttackFileErrors) {
  EXPECT_THROW(parse_attack_spec(YAML::Load("p: 2\nmasks: [\"11\"]\nlambdas: [{delta: \"00\", y: 0, weight: 0.5}]\n")), ConfigError);
  EXPECT_THROW(parse_attack_spec(YAML::Load("p: 4\nmasks: [\"1111\"]\nlambdas: [{delta: \"0000\", y: 0, weight: 1}]\n")), ConfigError);
  EXPECT_THROW(parse_attack_spec(YAML::Load("p: 2\nmasks: [\"00\"]\nlambdas: [{delta: \"00\", y: 0, weight: 1}]\n")), ConfigError);
  EXPECT_NO_THROW(parse_attack_spec(YAML::Load("p: 2\nmasks: [\"01\"]\nlambdas: [{delta: \"00\", y: 0, weight: 1}]\n")));
}

TEST(Binary, ExitCodes) {
  const std::string out = (fs::temp_directory_path() / ("scad_cli_test_" + std::to_string(::getpid()) + ".csv")).string();
  const auto spec = temp_file("ok.yaml", kP2Spec);
  EXPECT_EQ(run_cli("sweep " + spec.string() + " --out " + out), 0);
  std::ifstream f(out);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "Q,mask,p_accept,entropy_bound,leak_ec,rate_raw,rate_clamped,baseline_rate");

  EXPECT_EQ(run_cli("oracle " + std::string(SCAD_SAMPLE_DIR) + "/attack_p2.yaml"), 0);
  EXPECT_EQ(run_cli("validate " + std::string(SCAD_SAMPLE_DIR) + "/validate_p2.yaml --rounds 100000 --seeds 3 --attacks 1"), 0);
  EXPECT_EQ(run_cli("validate " + std::string(SCAD_SAMPLE_DIR) + "/validate_p2.yaml --rounds 100000 --seeds 3 --attacks 1 --analytic-offset 0.05"), 1);
  EXPECT_EQ(run_cli("validate " + std::string(SCAD_SAMPLE_DIR) + "/validate_p2.yaml --rounds 7"), 2);
  EXPECT_EQ(run_cli("sweep /nonexistent.yaml"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli(""), 2);
  fs::remove(spec);
  fs::remove(out);
}
