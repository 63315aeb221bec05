#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "specgal/errors.hpp"
#include "specgal_tools/scenario.hpp"

using namespace specgal::cli;
namespace fs = std::filesystem;

namespace {

const char* kKatoRellich = R"(
[scenario]
name = kr
kind = kato-rellich
[kato-rellich]
alpha = %ALPHA%
dimension = 3
v_norm = 2.0
r = 1000.0
)";

std::string replace(std::string s, const std::string& key, const std::string& value) {
  return s.replace(s.find(key), key.size(), value);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
  for (const auto& i : issues) {
    if (i.find(needle) != std::string::npos) return true;
  }
  return false;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("specgal-cli-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string exponential_cube_text() { return read_file(resolve_scenario("exponential-cube")); }

}  // namespace

TEST(CliValidate, RejectsLowAlpha) {
  const auto issues = validate_scenario(parse_scenario(replace(kKatoRellich, "%ALPHA%", "0.5")));
  ASSERT_FALSE(issues.empty());
  EXPECT_TRUE(mentions(issues, "alpha > D/4"));
  EXPECT_TRUE(mentions(issues, "kato-rellich.alpha"));
}

TEST(CliValidate, AcceptsAdmissibleAlpha) {
  EXPECT_TRUE(validate_scenario(parse_scenario(replace(kKatoRellich, "%ALPHA%", "1.0"))).empty());
}

TEST(CliValidate, RejectsDivergentTrace) {
  std::string text = exponential_cube_text();
  text = replace(text, "decay = 2.0", "decay = 1.0");  // D = 3 needs decay > 1.5
  const auto issues = validate_scenario(parse_scenario(text));
  EXPECT_TRUE(mentions(issues, "trace-class gate"));
  EXPECT_TRUE(mentions(issues, "initial.decay"));
}

TEST(CliValidate, RejectsTraceAboveCeiling) {
  std::string text = exponential_cube_text();
  text = replace(text, "amplitude = 0.25", "amplitude = 100.0\ntrace_ceiling = 1.0");
  EXPECT_TRUE(mentions(validate_scenario(parse_scenario(text)), "initial.trace_ceiling"));
}

TEST(CliValidate, RejectsNonPositiveAp) {
  std::string text = exponential_cube_text();
  text = replace(text, "a_scale = 0.5", "a_scale = 0.05");
  text += "\n[audit]\np = 1\n";
  const auto issues = validate_scenario(parse_scenario(text));
  EXPECT_TRUE(mentions(issues, "audit.p"));
  EXPECT_TRUE(mentions(issues, "<= 0"));
}

TEST(CliValidate, ReportsAllIssuesTogether) {
  std::string text = exponential_cube_text();
  text = replace(text, "decay = 2.0", "decay = 1.0");
  text = replace(text, "horizon = 0.5", "horizon = -1");
  EXPECT_GE(validate_scenario(parse_scenario(text)).size(), 2u);
}

TEST(CliParse, MalformedFileNamesLine) {
  try {
    parse_scenario("[scenario]\nname = x\n[broken\n");
    FAIL() << "expected ConfigurationError";
  } catch (const specgal::ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(CliList, BundledScenariosAllValidate) {
  const auto list = list_scenarios();
  ASSERT_GE(list.size(), 5u);
  bool found = false;
  for (const auto& s : list) {
    found = found || s.name == "exponential-cube";
    EXPECT_FALSE(s.description.empty()) << s.name;
    const auto issues = validate_scenario(load_scenario(s.path));
    EXPECT_TRUE(issues.empty()) << s.name << ": " << (issues.empty() ? "" : issues.front());
  }
  EXPECT_TRUE(found);
  EXPECT_THROW(load_scenario(resolve_scenario("no-such-scenario")), std::runtime_error);
}

TEST(CliFormat, NumbersRoundTripBitExact) {
  std::mt19937_64 rng(3);
  std::vector<double> values = {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 5e-324, 1.7976931348623157e308,
                                std::nextafter(1.0, 2.0), -2.5e-17};
  std::uniform_int_distribution<std::uint64_t> bits;
  while (values.size() < 2000) {
    const std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (std::isfinite(v)) values.push_back(v);
  }
  for (const double v : values) {
    const double back = std::strtod(format_number(v).c_str(), nullptr);
    EXPECT_EQ(std::memcmp(&back, &v, sizeof v), 0) << format_number(v);
  }
}

TEST(CliFormat, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(CliRun, WritesOutputsAndReproducibleManifest) {
  const auto config = load_scenario(resolve_scenario("exponential-cube"));
  RunOptions opt;
  opt.output_dir = scratch("a");
  const auto a = run_scenario(config, opt);
  ASSERT_EQ(a.outputs.size(), 2u);
  for (const auto& p : a.outputs) EXPECT_TRUE(fs::exists(p)) << p;
  EXPECT_TRUE(fs::exists(a.manifest));
  const std::string manifest = read_file(a.manifest);
  EXPECT_NE(manifest.find("config_hash = fnv1a64:"), std::string::npos);
  EXPECT_NE(manifest.find(std::string("tool_version = ") + kToolVersion), std::string::npos);

  opt.output_dir = scratch("b");
  const auto b = run_scenario(config, opt);
  EXPECT_EQ(manifest, read_file(b.manifest));
  for (std::size_t i = 0; i < a.outputs.size(); ++i) EXPECT_EQ(read_file(a.outputs[i]), read_file(b.outputs[i]));

  // Every numeric field survives a text round trip unchanged.
  std::istringstream series(read_file(a.outputs[0]));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(series, line)) {
    if (line.empty() || line[0] == '#' || !(std::isdigit(line[0]) || line[0] == '-')) continue;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) continue;
      EXPECT_EQ(format_number(v), cell);
    }
    ++rows;
  }
  EXPECT_EQ(rows, 51u);
}

TEST(CliRun, SeedOverrideChangesHash) {
  const auto config = load_scenario(resolve_scenario("exponential-cube"));
  RunOptions opt;
  opt.output_dir = scratch("c");
  const auto a = read_file(run_scenario(config, opt).manifest);
  opt.output_dir = scratch("d");
  opt.seed_override = 12345;
  const auto b = read_file(run_scenario(config, opt).manifest);
  EXPECT_NE(a.substr(a.find("config_hash")), b.substr(b.find("config_hash")));
}

TEST(CliRun, InvalidConfigRefusesToRun) {
  RunOptions opt;
  opt.output_dir = scratch("e");
  EXPECT_THROW(run_scenario(parse_scenario(replace(kKatoRellich, "%ALPHA%", "0.5")), opt),
               specgal::ConfigurationError);
  EXPECT_FALSE(fs::exists(opt.output_dir / "manifest.txt"));
}
