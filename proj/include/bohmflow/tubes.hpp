#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bohmflow/propagator.hpp"
#include "bohmflow/spectral.hpp"
#include "bohmflow/trajectory.hpp"

namespace bohmflow {

struct Interval {
  double lo;
  double hi;
};

enum class RegionName { transmitted, reflected, resonance, custom };
std::string_view to_string(RegionName name);

/// Fixed region of a 1D configuration space: a set of disjoint intervals.
/// Infinite bounds are clipped to the grid.
struct RestrictedRegion {
  RegionName name = RegionName::custom;
  std::string label;
  std::vector<Interval> intervals;

  bool contains(double x) const;
  /// Throws Error(InvalidArgument) if intervals overlap or are reversed.
  void validate() const;
};

/// {reflected, resonance, transmitted} split at the barrier edges.
std::array<RestrictedRegion, 3> barrier_partition(const BarrierSpec& barrier);

/// Integral of rho over [lo, hi] (clipped to the grid), using the exact
/// integral of the trigonometric interpolant so partial cells at moving
/// boundaries carry no O(dx^2) quadrature error.
double interval_probability(const WaveField& field, double lo, double hi);
double interval_probability(const TrigInterpolant& rho, const Axis& axis, double lo, double hi);
double restricted_probability(const WaveField& field, const RestrictedRegion& region);

struct FluxInterval {
  double param_mid;
  double dP_dt;
  double boundary_flux;  // -(J at upper bounds) + (J at lower bounds), midpoint in the parameter
  double residual;
};

struct FluxBalanceReport {
  std::vector<FluxInterval> intervals;
  double max_residual = 0.0;
  double max_boundary_current = 0.0;
};

/// Checks dP/dt = -(flux through the region boundary) on every snapshot
/// interval. Both sides use the trigonometric interpolants of rho and J so
/// the only remaining error is the time discretization.
FluxBalanceReport flux_balance(const PropagationRecord& record, const RestrictedRegion& region);

/// Fraction of trajectories inside the region at `param` (halted paths count at their last position).
double counting_probability(std::span<const Trajectory> ensemble, const RestrictedRegion& region,
                            double param);

/// Target for the transmitted-side separatrix at the end of a barrier run:
/// the density minimum between the barrier's right edge and the transmitted
/// peak. If that minimum lies below 1e3 times the node threshold, the target
/// moves right to where the transmitted tail climbs back above that level.
double separatrix_target(const WaveField& final_field, const BarrierSpec& barrier);

struct SeparatrixOptions {
  /// Forward bisection stops once the bracket is narrower than this fraction of the domain width.
  double bisection_tolerance = 1e-6;
  /// Allowed backward/bisection disagreement, fraction of the domain width.
  double agreement_tolerance = 1e-3;
  std::size_t scan_points = 64;
  IntegratorOptions integrator;
};

struct SeparatrixResult {
  Trajectory trajectory;  // backward-integrated, samples in decreasing param
  double initial_backward;
  double initial_bisection;
  double disagreement;
};

/// Backward-integrates from (target, final param) and cross-checks the
/// initial position by bisecting forward trajectories over the initial
/// support. Throws Error(NodeAtTarget) or Error(BisectionDisagreement).
SeparatrixResult find_separatrix(const GuidanceField& field, double target,
                                 const SeparatrixOptions& options = {});

enum class Side { left, right };

struct TubeResult {
  std::vector<double> params;
  std::vector<double> probability;
  std::vector<double> boundary;  // separatrix position per sample
  double initial = 0.0;          // P0 from rho(., 0) and the separatrix start
  double asymptotic = 0.0;       // value at the last sample
  double constancy_error = 0.0;  // max |P(t) - P0|
};

/// Probability on one side of a separatrix tracked through the record.
TubeResult verify_tube(const PropagationRecord& record, const Trajectory& separatrix, Side side);
/// Probability confined between two separatrices.
TubeResult verify_layer(const PropagationRecord& record, const Trajectory& lower, const Trajectory& upper);

void write_tube_json(std::ostream& out, const TubeResult& tube, const std::string& separatrix_label);

}  // namespace bohmflow
