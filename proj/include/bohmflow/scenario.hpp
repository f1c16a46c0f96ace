#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bohmflow/analytic_packets.hpp"
#include "bohmflow/paraxial.hpp"
#include "bohmflow/propagator.hpp"
#include "bohmflow/trajectory.hpp"

namespace bohmflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct OpticsConfig {
  double wavelength = 1.55;
  IndexProfile profile;
};

enum class InitialKind { packets, file, fundamental_mode };

struct AnalysesConfig {
  std::optional<EnsembleSpec> ensemble;
  /// Trajectories per packet guided by that packet alone (free space only).
  std::size_t contrast_per_packet = 0;
  bool non_crossing = false;
  bool regions = false;
  bool separatrix = false;
  bool tubes = false;
  bool statistics = false;
  bool arm_split = false;
  double arm_axis = 0.0;
  std::optional<double> expected_left_fraction;
  double arm_tolerance = 1e-3;
};

/// Parsed and schema-checked scenario file. Lengths of optics runs are in micrometers.
struct ScenarioConfig {
  std::string name;
  Mode mode = Mode::quantum;
  Units units;
  Axis grid;
  InitialKind initial = InitialKind::packets;
  std::vector<GaussianSpec> packets;
  std::filesystem::path initial_file;
  Potential potential = Potential::free();
  std::optional<OpticsConfig> optics;
  PropagationControls controls;
  AnalysesConfig analyses;
  std::optional<std::filesystem::path> output;
  std::uint64_t seed = 1;
  nlohmann::ordered_json source;
};

/// Throws Error(Config) naming the offending key. Relative file paths resolve against base_dir.
ScenarioConfig parse_scenario(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct ValidationReport {
  std::vector<std::string> notes;
  std::size_t estimated_bytes = 0;
  double estimated_seconds = 0.0;
};

/// Physics guards that need the grid: paraxial contrast, initial edge
/// amplitude, tube/absorber compatibility. Throws Error(Config).
ValidationReport validate_scenario(const ScenarioConfig& config);

struct RunOptions {
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct CheckResult {
  std::string name;
  double measured;
  double limit;
  bool pass;
  std::string detail;
};

struct RunResult {
  int exit_code = kExitOk;
  std::filesystem::path directory;
  std::vector<CheckResult> checks;
  std::vector<std::string> notes;
};

/// Propagates, runs the requested analyses and writes the artifact
/// directory. Numerical failures are reported through exit_code, not thrown.
RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options);

/// Output root: $BOHMFLOW_OUTPUT_ROOT if set, else ./runs.
std::filesystem::path default_output_root();

}  // namespace bohmflow
