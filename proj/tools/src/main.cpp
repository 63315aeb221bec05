#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "specgal/errors.hpp"
#include "specgal_tools/scenario.hpp"

namespace cli = specgal::cli;

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin scenario runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kToolVersion);

  std::string output_dir = ".";
  std::optional<std::uint64_t> seed_override;
  unsigned workers = 1;
  double tolerance_scale = 1.0;
  std::string config;

  auto* run = app.add_subcommand("run", "Run a scenario and write its tables and manifest");
  run->add_option("config", config, "Scenario file or bundled scenario name")->required();
  run->add_option("--output-dir", output_dir, "Directory for the output files");
  run->add_option("--seed-override", seed_override, "Replace every seed in the file");
  run->add_option("--workers", workers, "Ensemble worker threads")->check(CLI::PositiveNumber);
  run->add_option("--tolerance-scale", tolerance_scale, "Multiply integrator tolerances")
      ->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a scenario without computing");
  validate->add_option("config", config, "Scenario file or bundled scenario name")->required();

  auto* list = app.add_subcommand("list", "List bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& s : cli::list_scenarios()) std::cout << s.name << "\t" << s.description << "\n";
      return 0;
    }
    const auto path = cli::resolve_scenario(config);
    const cli::ScenarioConfig cfg = cli::load_scenario(path);
    if (validate->parsed()) {
      const auto issues = cli::validate_scenario(cfg);
      if (issues.empty()) {
        std::cout << cfg.name() << ": ok\n";
        return 0;
      }
      for (const auto& i : issues) std::cout << path.string() << ": " << i << "\n";
      return 1;
    }
    cli::RunOptions opts;
    opts.output_dir = output_dir;
    opts.seed_override = seed_override;
    opts.workers = workers;
    opts.tolerance_scale = tolerance_scale;
    const auto result = cli::run_scenario(cfg, opts);
    for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << "\n";
    std::cout << "wrote " << result.manifest.string() << "\n";
    std::printf("wall time %.3f s\n", result.wall_seconds);
    return 0;
  } catch (const specgal::ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const specgal::Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
