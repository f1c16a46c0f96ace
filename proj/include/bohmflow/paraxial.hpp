#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "bohmflow/propagator.hpp"
#include "bohmflow/trajectory.hpp"

namespace bohmflow {

/// Refractive-index map n(x, z). Lengths in micrometers.
struct IndexProfile {
  enum class Geometry { uniform, straight, s_bend, y_junction, sampled };

  Geometry geometry = Geometry::uniform;
  double n0 = 1.5;
  double delta_n = 0.01;
  double core_width = 4.0;
  double core_center = 0.0;
  double edge_smoothness = 0.2;
  // s-bend: core center moves by `bend_offset` between bend_start and bend_end (raised cosine).
  double bend_start = 0.0;
  double bend_end = 0.0;
  double bend_offset = 0.0;
  // y-junction: arms diverge linearly from split_z at +/- half_angle_deg.
  double split_z = 0.0;
  double half_angle_deg = 1.0;
  // sampled: n on a rectangular (x, z) lattice, z-major; bilinear in between.
  std::vector<double> sample_x;
  std::vector<double> sample_z;
  std::vector<double> sample_n;

  double index(double x, double z) const;
  /// Transverse centers of the guiding cores at z (one or two).
  std::vector<double> core_centers(double z) const;
  bool z_dependent() const;
};

/// Sampled index file: CSV with header "x,z,n", any row order, full lattice required.
IndexProfile load_index_csv(const std::filesystem::path& path, double n0);

inline constexpr double kParaxialContrastLimit = 0.05;

/// Schroedinger-equivalent of the paraxial envelope equation:
/// i dphi/dz = -lap_perp phi / (2 k_z) + (k / 2 n0)(n0^2 - n^2) phi.
struct ParaxialProblem {
  double wavelength;
  double k;    // 2 pi / lambda
  double k_z;  // n0 k, the optical mass
  Units units;
  IndexProfile profile;

  std::vector<double> effective_potential(const Grid& grid, double z) const;
};

/// Throws Error(ParaxialViolation) if max |n - n0| / n0 on the grid reaches the contrast limit.
ParaxialProblem reduce_to_paraxial(const IndexProfile& profile, double wavelength, const Grid& grid,
                                   double z_extent = 0.0);

/// z-propagation with the potential sampled at each step midpoint. The
/// field is re-tagged as optics mode with the problem's units.
PropagationRecord propagate_z(const WaveField& field, const ParaxialProblem& problem,
                              const PropagationControls& controls);
PropagationRecord propagate_z(const WaveField& field, const ParaxialProblem& problem, double dz,
                              double z_final, std::size_t record_every);

/// Fundamental guided mode of the cross-section at z by imaginary-z relaxation.
/// With step > 0 the relaxed mode is then windowed along real z so that it is
/// an eigenvector of the split step of that length, not only of the exact
/// operator; otherwise the O(step^2) mismatch radiates during propagation.
WaveField fundamental_mode(const Grid& grid, const ParaxialProblem& problem, double z = 0.0,
                           const RelaxationOptions& options = {}, double step = 0.0);

struct StreamlineBundle {
  std::vector<Trajectory> streamlines;
  NonCrossingReport crossing;
};

StreamlineBundle optical_streamlines(const PropagationRecord& record, const EnsembleSpec& ensemble,
                                     unsigned threads = 1);

struct ArmSplit {
  double left;
  double right;
  double total;
  double left_fraction() const { return left / total; }
  double right_fraction() const { return right / total; }
};

/// Power on either side of `axis`.
ArmSplit arm_power_split(const WaveField& field, double axis = 0.0);

}  // namespace bohmflow
