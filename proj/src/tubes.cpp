#include "bohmflow/tubes.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "bohmflow/errors.hpp"
#include "bohmflow/hydro.hpp"
#include "bohmflow/spectral.hpp"

namespace bohmflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_line(const Grid& grid) {
  if (grid.rank() != 1) throw Error(ErrorKind::InvalidArgument, "restricted probabilities are implemented in 1D");
}

}  // namespace

std::string_view to_string(RegionName name) {
  switch (name) {
    case RegionName::transmitted: return "transmitted";
    case RegionName::reflected: return "reflected";
    case RegionName::resonance: return "resonance";
    case RegionName::custom: return "custom";
  }
  return "custom";
}

bool RestrictedRegion::contains(double x) const {
  return std::any_of(intervals.begin(), intervals.end(), [x](const Interval& iv) { return x >= iv.lo && x <= iv.hi; });
}

void RestrictedRegion::validate() const {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (!(intervals[i].hi > intervals[i].lo)) throw Error(ErrorKind::InvalidArgument, "region interval is empty or reversed");
    if (i > 0 && intervals[i].lo < intervals[i - 1].hi) {
      throw Error(ErrorKind::InvalidArgument, "region intervals must be sorted and disjoint");
    }
  }
}

std::array<RestrictedRegion, 3> barrier_partition(const BarrierSpec& barrier) {
  const double a = barrier.left_edge();
  const double b = barrier.right_edge();
  return {RestrictedRegion{RegionName::reflected, "reflected", {{-kInf, a}}},
          RestrictedRegion{RegionName::resonance, "resonance", {{a, b}}},
          RestrictedRegion{RegionName::transmitted, "transmitted", {{b, kInf}}}};
}

double interval_probability(const WaveField& field, double lo, double hi) {
  require_line(field.grid());
  return interval_probability(TrigInterpolant(field.grid().x(), density(field)), field.grid().x(), lo, hi);
}

double interval_probability(const TrigInterpolant& rho, const Axis& ax, double lo, double hi) {
  lo = std::max(lo, ax.min);
  hi = std::min(hi, ax.max);
  if (!(hi > lo)) return 0.0;
  return rho.integral(lo, hi);
}

double restricted_probability(const WaveField& field, const RestrictedRegion& region) {
  region.validate();
  double p = 0.0;
  for (const auto& iv : region.intervals) p += interval_probability(field, iv.lo, iv.hi);
  return p;
}

FluxBalanceReport flux_balance(const PropagationRecord& record, const RestrictedRegion& region) {
  region.validate();
  require_line(record.grid());
  const Axis& ax = record.grid().x();

  std::vector<double> probability, outflow;
  FluxBalanceReport report;
  for (const auto& snap : record.snapshots) {
    const TrigInterpolant rho(ax, density(snap));
    const TrigInterpolant current(ax, probability_current(snap)[0]);
    double p = 0.0, out = 0.0;
    for (const auto& iv : region.intervals) {
      const double lo = std::max(iv.lo, ax.min);
      const double hi = std::min(iv.hi, ax.max);
      if (!(hi > lo)) continue;
      p += interval_probability(rho, ax, lo, hi);
      if (iv.lo > ax.min) {
        const double j = current(lo);
        out -= j;
        report.max_boundary_current = std::max(report.max_boundary_current, std::abs(j));
      }
      if (iv.hi < ax.max) {
        const double j = current(hi);
        out += j;
        report.max_boundary_current = std::max(report.max_boundary_current, std::abs(j));
      }
    }
    probability.push_back(p);
    outflow.push_back(out);
  }
  for (std::size_t k = 0; k + 1 < probability.size(); ++k) {
    const double dparam = record.snapshots[k + 1].param() - record.snapshots[k].param();
    FluxInterval iv;
    iv.param_mid = 0.5 * (record.snapshots[k + 1].param() + record.snapshots[k].param());
    iv.dP_dt = (probability[k + 1] - probability[k]) / dparam;
    iv.boundary_flux = -0.5 * (outflow[k] + outflow[k + 1]);
    iv.residual = std::abs(iv.dP_dt - iv.boundary_flux);
    report.max_residual = std::max(report.max_residual, iv.residual);
    report.intervals.push_back(iv);
  }
  return report;
}

double counting_probability(std::span<const Trajectory> ensemble, const RestrictedRegion& region, double param) {
  if (ensemble.empty()) return 0.0;
  std::size_t inside = 0;
  for (const auto& t : ensemble) {
    if (t.samples.empty()) continue;
    const auto p = t.position_at(param);
    const double x = p ? (*p)[0] : t.back().position[0];
    if (region.contains(x)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(ensemble.size());
}

double separatrix_target(const WaveField& final_field, const BarrierSpec& barrier) {
  require_line(final_field.grid());
  const Axis& ax = final_field.grid().x();
  const auto rho = density(final_field);
  const double thr = kNodeFraction * *std::max_element(rho.begin(), rho.end());
  const double edge = barrier.right_edge();
  std::size_t start = 0;
  while (start < ax.n && ax.coord(start) < edge) ++start;
  if (start >= ax.n - 3) throw Error(ErrorKind::NodeAtTarget, "barrier edge is outside the grid");
  const auto peak = static_cast<std::size_t>(std::max_element(rho.begin() + start, rho.end() - 3) - rho.begin());
  const auto low = static_cast<std::size_t>(std::min_element(rho.begin() + start, rho.begin() + peak + 1) - rho.begin());
  if (rho[low] > 1e3 * thr) return ax.coord(low);
  std::size_t i = peak;
  while (i > low && rho[i - 1] >= 1e3 * thr) --i;
  if (rho[i] <= thr) throw Error(ErrorKind::NodeAtTarget, "no transmitted density beyond the barrier");
  return ax.coord(i);
}

SeparatrixResult find_separatrix(const GuidanceField& field, double target, const SeparatrixOptions& o) {
  if (field.rank() != 1) throw Error(ErrorKind::InvalidArgument, "separatrices are located in 1D");
  const auto params = field.params();
  const double t_end = params.back();
  const Axis& ax = field.grid().x();
  const double width = ax.width();
  if (!(field.density({target, 0.0}, t_end) > field.node_threshold(t_end))) {
    throw Error(ErrorKind::NodeAtTarget, "density vanishes at the separatrix target");
  }

  SeparatrixResult result;
  result.trajectory = integrate_trajectory(field, {target, 0.0}, Direction::backward, "separatrix", o.integrator);
  if (result.trajectory.status != TrajectoryStatus::completed) {
    throw Error(ErrorKind::NodeAtTarget, std::string("separatrix stopped early: ") +
                                             std::string(to_string(result.trajectory.status)));
  }
  result.initial_backward = result.trajectory.back().position[0];

  // Forward bisection on the monotone map x(0) -> x(t_end) - target.
  auto offset = [&](double x0) -> std::optional<double> {
    try {
      const auto t = integrate_trajectory(field, {x0, 0.0}, Direction::forward, {}, o.integrator);
      const double x = t.back().position[0];
      if (t.status == TrajectoryStatus::completed) return x - target;
      if (t.status == TrajectoryStatus::left_grid) return x < target ? -width : width;
      return std::nullopt;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::StartAtNode) return std::nullopt;
      throw;
    }
  };

  const auto rho0 = field.density_snapshot(0);
  const double thr = kNodeFraction * *std::max_element(rho0.begin(), rho0.end());
  std::size_t lo_i = 3, hi_i = ax.n - 4;
  while (lo_i < hi_i && rho0[lo_i] <= 1e3 * thr) ++lo_i;
  while (hi_i > lo_i && rho0[hi_i] <= 1e3 * thr) --hi_i;
  const double lo_x = ax.coord(lo_i), hi_x = ax.coord(hi_i);

  std::optional<std::pair<double, double>> bracket;
  std::optional<double> prev_x, prev_g;
  for (std::size_t s = 0; s < o.scan_points && !bracket; ++s) {
    const double x = lo_x + (hi_x - lo_x) * static_cast<double>(s) / static_cast<double>(o.scan_points - 1);
    const auto g = offset(x);
    if (!g) continue;
    if (prev_g && *prev_g < 0.0 && *g >= 0.0) bracket = std::make_pair(*prev_x, x);
    prev_x = x;
    prev_g = g;
  }
  if (!bracket) throw Error(ErrorKind::BisectionDisagreement, "no forward trajectory pair straddles the target");
  auto [a, b] = *bracket;
  for (int iter = 0; iter < 100 && (b - a) > o.bisection_tolerance * width; ++iter) {
    const double m = 0.5 * (a + b);
    const auto g = offset(m);
    if (!g) break;
    (*g < 0.0 ? a : b) = m;
  }
  result.initial_bisection = 0.5 * (a + b);
  result.disagreement = std::abs(result.initial_bisection - result.initial_backward);
  if (result.disagreement > o.agreement_tolerance * width) {
    throw Error(ErrorKind::BisectionDisagreement,
                "backward and bisection separatrix starts differ by " + std::to_string(result.disagreement));
  }
  return result;
}

namespace {

TubeResult tube_from(const PropagationRecord& record, const std::function<Interval(double)>& bounds,
                     const std::function<double(double)>& boundary) {
  TubeResult tube;
  const Axis& ax = record.grid().x();
  for (const auto& snap : record.snapshots) {
    const auto iv = bounds(snap.param());
    tube.params.push_back(snap.param());
    tube.probability.push_back(interval_probability(TrigInterpolant(ax, density(snap)), ax, iv.lo, iv.hi));
    tube.boundary.push_back(boundary(snap.param()));
  }
  tube.initial = tube.probability.front();
  tube.asymptotic = tube.probability.back();
  for (double p : tube.probability) tube.constancy_error = std::max(tube.constancy_error, std::abs(p - tube.initial));
  return tube;
}

double position_or_throw(const Trajectory& t, double param) {
  const auto p = t.position_at(param);
  if (!p) throw Error(ErrorKind::InvalidArgument, "separatrix '" + t.label + "' does not span the record");
  return (*p)[0];
}

}  // namespace

TubeResult verify_tube(const PropagationRecord& record, const Trajectory& separatrix, Side side) {
  require_line(record.grid());
  auto boundary = [&](double p) { return position_or_throw(separatrix, p); };
  return tube_from(
      record,
      [&](double p) {
        const double x = boundary(p);
        return side == Side::right ? Interval{x, kInf} : Interval{-kInf, x};
      },
      boundary);
}

TubeResult verify_layer(const PropagationRecord& record, const Trajectory& lower, const Trajectory& upper) {
  require_line(record.grid());
  return tube_from(
      record, [&](double p) { return Interval{position_or_throw(lower, p), position_or_throw(upper, p)}; },
      [&](double p) { return position_or_throw(lower, p); });
}

void write_tube_json(std::ostream& out, const TubeResult& tube, const std::string& separatrix_label) {
  nlohmann::ordered_json j;
  j["separatrix"] = separatrix_label;
  j["initial_probability"] = tube.initial;
  j["asymptotic_probability"] = tube.asymptotic;
  j["constancy_error"] = tube.constancy_error;
  auto& series = j["P_series"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < tube.params.size(); ++k) {
    series.push_back({{"t", tube.params[k]}, {"P", tube.probability[k]}, {"boundary", tube.boundary[k]}});
  }
  out << j.dump(2) << '\n';
}

}  // namespace bohmflow
