#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace specgal::cli {

inline constexpr const char* kToolVersion = "0.3.0";

// One parsed scenario file. `text` is kept verbatim for hashing.
struct ScenarioConfig {
  std::filesystem::path path;
  std::string text;
  boost::property_tree::ptree tree;

  std::string name() const;
  std::string kind() const;
  std::string description() const;
};

// Throws ConfigurationError (with the offending line) on malformed files and
// std::runtime_error when the file cannot be read.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(std::string text, std::filesystem::path origin = {});

struct RunOptions {
  std::filesystem::path output_dir = ".";
  std::optional<std::uint64_t> seed_override;
  unsigned workers = 1;
  double tolerance_scale = 1.0;
};

// Full precondition check without any solve. Each issue reads
// "section.key: message".
std::vector<std::string> validate_scenario(const ScenarioConfig& config,
                                           const RunOptions& options = {});

struct RunResult {
  std::vector<std::filesystem::path> outputs;
  std::filesystem::path manifest;
  double wall_seconds = 0.0;
};

// Validates, runs and writes <name>-series.csv, <name>-report.csv and
// manifest.txt into options.output_dir. Throws ConfigurationError listing all
// issues when validation fails; solver errors propagate.
RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options);

struct BundledScenario {
  std::string name;
  std::string description;
  std::filesystem::path path;
};

std::filesystem::path default_scenario_dir();
std::vector<BundledScenario> list_scenarios(const std::filesystem::path& dir = default_scenario_dir());

// Resolves a path, or the name of a bundled scenario.
std::filesystem::path resolve_scenario(const std::string& name_or_path,
                                       const std::filesystem::path& dir = default_scenario_dir());

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);
// Shortest round-trip text for a double: %.17g.
std::string format_number(double value);

}  // namespace specgal::cli
