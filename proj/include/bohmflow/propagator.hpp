#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bohmflow/wave_field.hpp"

namespace bohmflow {

/// "Almost square" barrier: V0 * s((x - a)/w) * s((b - x)/w) with s the
/// logistic function, a/b = center -/+ width/2 and w the edge smoothness.
/// w == 0 gives a hard-edged box.
struct BarrierSpec {
  double center = 0.0;
  double width = 1.0;
  double height = 1.0;
  double edge_smoothness = 0.0;

  double left_edge() const { return center - 0.5 * width; }
  double right_edge() const { return center + 0.5 * width; }
  double operator()(double x) const;
};

class Potential {
 public:
  enum class Kind { free, barrier, sampled };

  static Potential free() { return Potential(Kind::free, {}, {}); }
  static Potential barrier(const BarrierSpec& spec);
  /// Real, finite samples on the run grid.
  static Potential sampled(std::vector<double> values);

  Kind kind() const { return kind_; }
  const BarrierSpec& barrier_spec() const { return barrier_; }
  std::vector<double> sample(const Grid& grid) const;
  std::string describe() const;

 private:
  Potential(Kind kind, BarrierSpec barrier, std::vector<double> values)
      : kind_(kind), barrier_(barrier), values_(std::move(values)) {}
  Kind kind_;
  BarrierSpec barrier_;
  std::vector<double> values_;
};

/// Cosine-ramp imaginary potential of the given strength over `width` at each x edge.
struct AbsorberSpec {
  double width = 0.0;
  double strength = 0.0;
};

std::vector<double> absorber_profile(const Grid& grid, const AbsorberSpec& spec);

struct PropagationControls {
  double dt = 1e-3;
  double t_final = 1.0;
  /// Internal steps between recorded snapshots.
  std::size_t record_every = 1;
  std::optional<AbsorberSpec> absorber;
  /// Edge |psi| above this fraction of the peak raises BoundaryContamination (absorber off).
  double boundary_tolerance = 1e-6;
  /// Norm drift above this raises UnstableStep (absorber off).
  double norm_tolerance = 1e-8;
};

/// Snapshots at a uniform spacing starting with the initial state.
struct PropagationRecord {
  std::vector<WaveField> snapshots;
  double dt = 0.0;
  double record_interval = 0.0;
  double t_final = 0.0;
  double norm_drift = 0.0;
  bool absorbing = false;
  std::vector<double> potential;  // sampled at the first step
  std::string potential_description;

  const Grid& grid() const { return snapshots.front().grid(); }
  std::vector<double> params() const;
};

/// Every `stride`-th snapshot, keeping the first and the last.
/// Throws Error(InvalidArgument) unless stride divides the interval count.
PropagationRecord decimate(const PropagationRecord& record, std::size_t stride);

/// Returns the real potential at evolution parameter `param` sampled on the grid.
using PotentialSchedule = std::function<std::vector<double>(double param)>;

/// Strang-split spectral propagation: half potential kick, exact kinetic
/// step in Fourier space, half potential kick. The schedule is sampled at
/// the midpoint of every step. dt is shrunk so the run ends exactly at
/// t_final on a recorded snapshot.
PropagationRecord propagate_scheduled(const WaveField& initial, const PotentialSchedule& schedule,
                                      const PropagationControls& controls,
                                      std::string potential_description = {});

PropagationRecord propagate(const WaveField& initial, const Potential& potential,
                            const PropagationControls& controls);

/// <H> for a normalized field with the given real potential samples.
double energy_expectation(const WaveField& field, std::span<const double> potential);

struct RelaxationOptions {
  double dtau = 1e-2;
  std::size_t max_steps = 200000;
  /// Stop once the L2 change of the normalized state between checks drops below this.
  double state_tolerance = 1e-12;
  std::size_t check_every = 50;
};

/// Ground state by imaginary-parameter relaxation of `guess` under the potential.
WaveField relax_ground_state(const WaveField& guess, std::span<const double> potential,
                             const RelaxationOptions& options = {});

/// Concrete stand-in for a scattering experiment with an irregular packet:
/// two overlapping Gaussians of different widths hitting a smoothed barrier.
struct ScatteringScenario {
  WaveField initial;
  Potential potential;
  PropagationControls controls;
};
ScatteringScenario make_barrier_scenario();

/// Directory of binary snapshots plus manifest.json.
void save_record(const std::filesystem::path& dir, const PropagationRecord& record);
PropagationRecord load_record(const std::filesystem::path& dir);

}  // namespace bohmflow
