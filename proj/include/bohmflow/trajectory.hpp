#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bohmflow/analytic_packets.hpp"
#include "bohmflow/propagator.hpp"

namespace bohmflow {

using Point = std::array<double, 2>;  // y unused on 1D fields

enum class Direction { forward, backward };
enum class TrajectoryStatus { completed, halted_at_node, left_grid };
std::string_view to_string(TrajectoryStatus status);

struct TrajectorySample {
  double param;
  Point position;
  Point velocity;
};

struct Trajectory {
  std::string label;
  int rank = 1;
  std::vector<TrajectorySample> samples;
  TrajectoryStatus status = TrajectoryStatus::completed;

  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }
  /// Position at `param`, linear between stored samples. nullopt outside the covered range.
  std::optional<Point> position_at(double param) const;
};

/// Velocity source for streamline integration: a recorded run or a closed-form superposition.
class GuidanceField {
 public:
  virtual ~GuidanceField() = default;

  virtual int rank() const = 0;
  /// Parameter values at which trajectories are sampled, increasing.
  virtual std::span<const double> params() const = 0;
  /// nullopt where the guidance is undefined (at or below the node threshold).
  virtual std::optional<Point> velocity(const Point& p, double param) const = 0;
  virtual double density(const Point& p, double param) const = 0;
  virtual double node_threshold(double param) const = 0;
  /// Grid carrying the domain bounds and the density used for ensemble sampling.
  virtual const Grid& grid() const = 0;
  /// Density on grid() at sample index k.
  virtual std::vector<double> density_snapshot(std::size_t k) const = 0;
};

/// Interpolates v = J/rho from every snapshot: cubic in space, linear in the parameter.
class RecordGuidance final : public GuidanceField {
 public:
  explicit RecordGuidance(const PropagationRecord& record);

  int rank() const override { return grid_.rank(); }
  std::span<const double> params() const override { return params_; }
  std::optional<Point> velocity(const Point& p, double param) const override;
  double density(const Point& p, double param) const override;
  double node_threshold(double param) const override;
  const Grid& grid() const override { return grid_; }
  std::vector<double> density_snapshot(std::size_t k) const override { return rho_[k]; }

 private:
  struct Bracket {
    std::size_t k;
    double alpha;
  };
  Bracket bracket(double param) const;

  Grid grid_;
  std::vector<double> params_;
  std::vector<std::vector<double>> rho_;
  std::vector<std::vector<double>> vx_;
  std::vector<std::vector<double>> vy_;
  std::vector<double> thresholds_;
};

/// Closed-form guidance for free Gaussian superpositions. Two packets use
/// the explicit two-packet formula; other counts use J/rho of the sum.
class AnalyticGuidance final : public GuidanceField {
 public:
  AnalyticGuidance(std::vector<GaussianSpec> specs, Grid grid, std::vector<double> params);

  int rank() const override { return 1; }
  std::span<const double> params() const override { return params_; }
  std::optional<Point> velocity(const Point& p, double param) const override;
  double density(const Point& p, double param) const override;
  double node_threshold(double param) const override;
  const Grid& grid() const override { return grid_; }
  std::vector<double> density_snapshot(std::size_t k) const override;
  std::span<const GaussianSpec> specs() const { return specs_; }

 private:
  std::vector<GaussianSpec> specs_;
  Grid grid_;
  std::vector<double> params_;
};

struct IntegratorOptions {
  /// RK4 substeps per sample interval.
  int substeps = 8;
  /// Local rho below this multiple of the node threshold triggers step halving.
  double refine_factor = 1e3;
  int max_halvings = 6;
  /// Step-doubling tolerance used while refining near nodes (absolute position).
  double refine_tolerance = 1e-10;
};

/// Integrates dx/dparam = v(x, param) across the whole sample range,
/// starting at the first (forward) or last (backward) sample. Throws
/// Error(StartAtNode) if the start point sits at a node.
Trajectory integrate_trajectory(const GuidanceField& field, const Point& start, Direction direction,
                                std::string label = {}, const IntegratorOptions& options = {});

enum class Sampling { rho_weighted, uniform_in_interval, explicit_list };

struct EnsembleSpec {
  std::size_t n_traj = 100;
  Sampling sampling = Sampling::rho_weighted;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  std::vector<double> positions;
  std::uint64_t seed = 1;
};

/// Initial positions (1D), sorted ascending. rho-weighted sampling draws
/// i.i.d. from the density at the ensemble's starting sample.
std::vector<double> sample_initial_positions(const GuidanceField& field, const EnsembleSpec& spec,
                                             Direction direction = Direction::forward);

/// Parallel map over initial conditions; output order follows the sorted initial positions.
std::vector<Trajectory> integrate_ensemble(const GuidanceField& field, const EnsembleSpec& spec,
                                           Direction direction, unsigned threads = 1,
                                           const IntegratorOptions& options = {});

struct CrossingViolation {
  std::string lower_label;
  std::string upper_label;
  double param;
  double gap;
};

struct NonCrossingReport {
  std::size_t violations = 0;
  std::size_t comparisons = 0;
  double tolerance = 0.0;
  std::optional<CrossingViolation> first;

  bool ok() const { return violations == 0; }
};

inline constexpr double kCrossingTolerance = 1e-6;

/// Verifies that the initial ordering of 1D trajectories survives at every
/// shared sample. Overlaps smaller than kCrossingTolerance * domain_width are ignored.
NonCrossingReport check_non_crossing(std::span<const Trajectory> trajectories, double domain_width);

/// Kolmogorov-Smirnov distance between sample positions and the density on a 1D grid.
double ks_distance(std::span<const double> positions, const Grid& grid, std::span<const double> rho);

/// Positions of all trajectories at `param` (skipping ones that do not cover it).
std::vector<double> positions_at(std::span<const Trajectory> trajectories, double param);

/// CSV rows "label,t,x[,y],vx[,vy],status".
void write_trajectories_csv(std::ostream& out, std::span<const Trajectory> trajectories);

}  // namespace bohmflow
