// Scenario runner: bohmflow run|validate|version.

#include <CLI11.hpp>

#include <iostream>

#include "bohmflow/errors.hpp"
#include "bohmflow/field_io.hpp"
#include "bohmflow/scenario.hpp"

namespace {

int exit_for(const bohmflow::Error& e) {
  using bohmflow::ErrorKind;
  return e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Io || e.kind() == ErrorKind::InvalidArgument
             ? bohmflow::kExitConfig
             : bohmflow::kExitNumeric;
}

int do_validate(const std::string& path) {
  try {
    const auto config = bohmflow::load_scenario(path);
    const auto report = bohmflow::validate_scenario(config);
    std::cout << "OK " << config.name << '\n';
    for (const auto& n : report.notes) std::cout << "  " << n << '\n';
    std::cout << "  estimated memory " << report.estimated_bytes / (1024.0 * 1024.0) << " MiB\n";
    std::cout << "  estimated runtime " << report.estimated_seconds << " s\n";
    return bohmflow::kExitOk;
  } catch (const bohmflow::Error& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return exit_for(e);
  }
}

int do_run(const std::string& path, const std::string& out, std::optional<std::uint64_t> seed, unsigned threads) {
  bohmflow::ScenarioConfig config;
  try {
    config = bohmflow::load_scenario(path);
    (void)bohmflow::validate_scenario(config);
  } catch (const bohmflow::Error& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return exit_for(e);
  }
  bohmflow::RunOptions options;
  options.out = out;
  options.seed = seed;
  options.threads = threads;
  const auto result = bohmflow::run_scenario(config, options);
  for (const auto& c : result.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " " << bohmflow::format_double(c.measured) << '\n';
  }
  for (const auto& n : result.notes) std::cout << "  " << n << '\n';
  std::cout << "artifacts: " << result.directory.string() << '\n';
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian trajectories, probability tubes and optical streamlines"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "propagate a scenario and write its artifact directory");
  run->add_option("config", config_path, "scenario JSON")->required();
  run->add_option("--out", out, "artifact directory (default: $BOHMFLOW_OUTPUT_ROOT/<name> or ./runs/<name>)");
  auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--threads", threads, "worker threads for trajectory ensembles")->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a scenario without running it");
  validate->add_option("config", validate_path, "scenario JSON")->required();

  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bohmflow::kExitConfig;
  }

  if (app.got_subcommand("version")) {
    std::cout << "bohmflow " << BOHMFLOW_VERSION << '\n';
    return 0;
  }
  if (app.got_subcommand("validate")) return do_validate(validate_path);
  return do_run(config_path, out, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt, threads);
}
