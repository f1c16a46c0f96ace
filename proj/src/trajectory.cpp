#include "bohmflow/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "bohmflow/errors.hpp"
#include "bohmflow/field_io.hpp"
#include "bohmflow/hydro.hpp"

namespace bohmflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Four-point Lagrange weights for offsets -1, 0, 1, 2 at fractional position t.
std::array<double, 4> cubic_weights(double t) {
  return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
          -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
}

struct Stencil {
  std::size_t first;
  std::array<double, 4> w;
};

std::optional<Stencil> stencil(const Axis& axis, double x) {
  const double s = (x - axis.min) / axis.spacing();
  const double fl = std::floor(s);
  if (!(fl >= 1.0) || fl + 2.0 > static_cast<double>(axis.n - 1)) return std::nullopt;
  return Stencil{static_cast<std::size_t>(fl) - 1, cubic_weights(s - fl)};
}

/// Cubic (1D) or bicubic (2D) interpolation; NaN outside the interior or if any node sample is NaN.
double interpolate(const Grid& grid, std::span<const double> f, const Point& p) {
  const auto sx = stencil(grid.x(), p[0]);
  if (!sx) return kNaN;
  if (grid.rank() == 1) {
    double v = 0.0;
    for (int a = 0; a < 4; ++a) v += sx->w[a] * f[sx->first + a];
    return v;
  }
  const auto sy = stencil(grid.y(), p[1]);
  if (!sy) return kNaN;
  const std::size_t nx = grid.x().n;
  double v = 0.0;
  for (int b = 0; b < 4; ++b) {
    double row = 0.0;
    for (int a = 0; a < 4; ++a) row += sx->w[a] * f[(sy->first + b) * nx + sx->first + a];
    v += sy->w[b] * row;
  }
  return v;
}

bool near_edge(const Grid& grid, const Point& p) {
  auto close = [](const Axis& a, double x) {
    const double margin = 2.0 * a.spacing();
    return !(x > a.min + margin && x < a.max - margin);
  };
  return close(grid.x(), p[0]) || (grid.rank() == 2 && close(grid.y(), p[1]));
}

Point axpy(const Point& p, double h, const Point& v) { return {p[0] + h * v[0], p[1] + h * v[1]}; }

std::optional<Point> rk4(const GuidanceField& f, const Point& p, double t, double h) {
  const auto k1 = f.velocity(p, t);
  if (!k1) return std::nullopt;
  const auto k2 = f.velocity(axpy(p, 0.5 * h, *k1), t + 0.5 * h);
  if (!k2) return std::nullopt;
  const auto k3 = f.velocity(axpy(p, 0.5 * h, *k2), t + 0.5 * h);
  if (!k3) return std::nullopt;
  const auto k4 = f.velocity(axpy(p, h, *k3), t + h);
  if (!k4) return std::nullopt;
  return Point{p[0] + h / 6.0 * ((*k1)[0] + 2.0 * (*k2)[0] + 2.0 * (*k3)[0] + (*k4)[0]),
               p[1] + h / 6.0 * ((*k1)[1] + 2.0 * (*k2)[1] + 2.0 * (*k3)[1] + (*k4)[1])};
}

bool close_to_node(const GuidanceField& f, const Point& p, double t, double factor) {
  return f.density(p, t) < factor * f.node_threshold(t);
}

/// One base step; near nodes the step is halved (up to max_halvings times)
/// until step doubling agrees to the refinement tolerance.
std::optional<Point> advance(const GuidanceField& f, const Point& p, double t, double h, int depth,
                             const IntegratorOptions& o) {
  const bool refine = depth < o.max_halvings && close_to_node(f, p, t, o.refine_factor);
  if (!refine) {
    const auto r = rk4(f, p, t, h);
    if (r || depth >= o.max_halvings) return r;
  }
  const auto full = rk4(f, p, t, h);
  const auto half = rk4(f, p, t, 0.5 * h);
  const auto two_halves = half ? rk4(f, *half, t + 0.5 * h, 0.5 * h) : std::nullopt;
  if (full && two_halves && std::hypot((*full)[0] - (*two_halves)[0], (*full)[1] - (*two_halves)[1]) <
                                o.refine_tolerance) {
    return two_halves;
  }
  if (depth >= o.max_halvings) return std::nullopt;
  const auto mid = advance(f, p, t, 0.5 * h, depth + 1, o);
  if (!mid) return std::nullopt;
  return advance(f, *mid, t + 0.5 * h, 0.5 * h, depth + 1, o);
}

std::string default_label(std::size_t i) {
  std::ostringstream os;
  os << "traj-" << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

std::string_view to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::completed: return "completed";
    case TrajectoryStatus::halted_at_node: return "halted-at-node";
    case TrajectoryStatus::left_grid: return "left-grid";
  }
  return "unknown";
}

std::optional<Point> Trajectory::position_at(double param) const {
  if (samples.empty()) return std::nullopt;
  const bool increasing = samples.size() < 2 || samples.back().param > samples.front().param;
  const double lo = increasing ? samples.front().param : samples.back().param;
  const double hi = increasing ? samples.back().param : samples.front().param;
  const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
  if (param < lo - slack || param > hi + slack) return std::nullopt;
  if (samples.size() == 1) return samples.front().position;
  auto before = [increasing](const TrajectorySample& s, double v) { return increasing ? s.param < v : s.param > v; };
  auto it = std::lower_bound(samples.begin(), samples.end(), param, before);
  if (it == samples.end()) return samples.back().position;
  if (it == samples.begin() || std::abs(it->param - param) <= slack) return it->position;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double alpha = (param - a.param) / (b.param - a.param);
  return Point{a.position[0] + alpha * (b.position[0] - a.position[0]),
               a.position[1] + alpha * (b.position[1] - a.position[1])};
}

// ---------------------------------------------------------------------------

RecordGuidance::RecordGuidance(const PropagationRecord& record) : grid_(record.grid()), params_(record.params()) {
  if (record.snapshots.size() < 2) throw Error(ErrorKind::InvalidArgument, "record needs at least two snapshots");
  for (const auto& snap : record.snapshots) {
    auto rho = bohmflow::density(snap);
    const auto j = probability_current(snap);
    const double thr = kNodeFraction * *std::max_element(rho.begin(), rho.end());
    std::vector<double> vx(rho.size(), kNaN), vy;
    if (grid_.rank() == 2) vy.assign(rho.size(), kNaN);
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (rho[i] <= thr) continue;
      vx[i] = j[0][i] / rho[i];
      if (grid_.rank() == 2) vy[i] = j[1][i] / rho[i];
    }
    rho_.push_back(std::move(rho));
    vx_.push_back(std::move(vx));
    vy_.push_back(std::move(vy));
    thresholds_.push_back(thr);
  }
}

RecordGuidance::Bracket RecordGuidance::bracket(double param) const {
  const double step = params_[1] - params_[0];
  const double s = (param - params_[0]) / step;
  const double last = static_cast<double>(params_.size() - 2);
  const double k = std::clamp(std::floor(s), 0.0, last);
  return {static_cast<std::size_t>(k), std::clamp(s - k, 0.0, 1.0)};
}

double RecordGuidance::node_threshold(double param) const {
  const auto b = bracket(param);
  return (1.0 - b.alpha) * thresholds_[b.k] + b.alpha * thresholds_[b.k + 1];
}

double RecordGuidance::density(const Point& p, double param) const {
  const auto b = bracket(param);
  const double r0 = interpolate(grid_, rho_[b.k], p);
  const double r1 = interpolate(grid_, rho_[b.k + 1], p);
  const double r = (1.0 - b.alpha) * r0 + b.alpha * r1;
  return std::isnan(r) ? 0.0 : r;
}

std::optional<Point> RecordGuidance::velocity(const Point& p, double param) const {
  if (!(density(p, param) > node_threshold(param))) return std::nullopt;
  const auto b = bracket(param);
  Point v{0.0, 0.0};
  const double vx = (1.0 - b.alpha) * interpolate(grid_, vx_[b.k], p) + b.alpha * interpolate(grid_, vx_[b.k + 1], p);
  if (!std::isfinite(vx)) return std::nullopt;
  v[0] = vx;
  if (grid_.rank() == 2) {
    const double vy =
        (1.0 - b.alpha) * interpolate(grid_, vy_[b.k], p) + b.alpha * interpolate(grid_, vy_[b.k + 1], p);
    if (!std::isfinite(vy)) return std::nullopt;
    v[1] = vy;
  }
  return v;
}

// ---------------------------------------------------------------------------

AnalyticGuidance::AnalyticGuidance(std::vector<GaussianSpec> specs, Grid grid, std::vector<double> params)
    : specs_(std::move(specs)), grid_(std::move(grid)), params_(std::move(params)) {
  if (specs_.empty()) throw Error(ErrorKind::InvalidArgument, "analytic guidance needs packets");
  if (grid_.rank() != 1) throw Error(ErrorKind::InvalidArgument, "analytic guidance is 1D");
  if (params_.size() < 2 || !std::is_sorted(params_.begin(), params_.end())) {
    throw Error(ErrorKind::InvalidArgument, "analytic guidance needs at least two increasing sample params");
  }
  for (const auto& s : specs_) s.validate();
}

double AnalyticGuidance::density(const Point& p, double param) const {
  return superposition_density(specs_, p[0], param);
}

double AnalyticGuidance::node_threshold(double param) const {
  return kNodeFraction * superposition_peak_bound(specs_, param);
}

std::optional<Point> AnalyticGuidance::velocity(const Point& p, double param) const {
  try {
    const double v = specs_.size() == 2 ? superposition_velocity(specs_[0], specs_[1], p[0], param)
                                        : superposition_velocity(std::span(specs_), p[0], param);
    return Point{v, 0.0};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NodeSingularity) return std::nullopt;
    throw;
  }
}

std::vector<double> AnalyticGuidance::density_snapshot(std::size_t k) const {
  std::vector<double> rho(grid_.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = superposition_density(specs_, grid_.x().coord(i), params_[k]);
  return rho;
}

// ---------------------------------------------------------------------------

Trajectory integrate_trajectory(const GuidanceField& field, const Point& start, Direction direction,
                                std::string label, const IntegratorOptions& options) {
  const auto params = field.params();
  const Grid& grid = field.grid();
  Trajectory traj;
  traj.label = std::move(label);
  traj.rank = field.rank();
  const std::size_t n = params.size();
  auto param_at = [&](std::size_t i) { return direction == Direction::forward ? params[i] : params[n - 1 - i]; };

  if (near_edge(grid, start)) throw Error(ErrorKind::InvalidArgument, "trajectory must start in the grid interior");
  const double t0 = param_at(0);
  const auto v0 = field.velocity(start, t0);
  if (!v0) throw Error(ErrorKind::StartAtNode, "start point lies at a node of the density");
  traj.samples.push_back({t0, start, *v0});

  Point pos = start;
  for (std::size_t i = 1; i < n; ++i) {
    const double ta = param_at(i - 1);
    const double tb = param_at(i);
    const double h = (tb - ta) / options.substeps;
    for (int s = 0; s < options.substeps; ++s) {
      const double t = ta + s * h;
      const auto next = advance(field, pos, t, h, 0, options);
      if (!next) {
        traj.status = TrajectoryStatus::halted_at_node;
        return traj;
      }
      pos = *next;
      if (near_edge(grid, pos)) {
        traj.status = TrajectoryStatus::left_grid;
        const auto v = field.velocity(pos, t + h);
        traj.samples.push_back({t + h, pos, v.value_or(Point{kNaN, kNaN})});
        return traj;
      }
    }
    const auto v = field.velocity(pos, tb);
    if (!v) {
      traj.status = TrajectoryStatus::halted_at_node;
      return traj;
    }
    traj.samples.push_back({tb, pos, *v});
  }
  return traj;
}

std::vector<double> sample_initial_positions(const GuidanceField& field, const EnsembleSpec& spec,
                                             Direction direction) {
  std::vector<double> xs;
  switch (spec.sampling) {
    case Sampling::explicit_list: xs = spec.positions; break;
    case Sampling::uniform_in_interval: {
      if (!(spec.interval_hi > spec.interval_lo)) throw Error(ErrorKind::InvalidArgument, "empty sampling interval");
      if (spec.n_traj == 1) {
        xs.push_back(0.5 * (spec.interval_lo + spec.interval_hi));
        break;
      }
      for (std::size_t i = 0; i < spec.n_traj; ++i) {
        xs.push_back(spec.interval_lo +
                     (spec.interval_hi - spec.interval_lo) * static_cast<double>(i) / static_cast<double>(spec.n_traj - 1));
      }
      break;
    }
    case Sampling::rho_weighted: {
      if (field.rank() != 1) throw Error(ErrorKind::InvalidArgument, "rho-weighted sampling is 1D");
      const std::size_t k = direction == Direction::forward ? 0 : field.params().size() - 1;
      const auto rho = field.density_snapshot(k);
      const Axis& ax = field.grid().x();
      const double dx = ax.spacing();
      const double thr = kNodeFraction * *std::max_element(rho.begin(), rho.end());
      // Restrict to the interior so every draw is a legal start point.
      const std::size_t lo = 3, hi = ax.n - 4;
      std::vector<double> cdf(ax.n, 0.0);
      for (std::size_t i = lo + 1; i <= hi; ++i) cdf[i] = cdf[i - 1] + 0.5 * (rho[i - 1] + rho[i]) * dx;
      for (std::size_t i = hi + 1; i < ax.n; ++i) cdf[i] = cdf[hi];
      const double total = cdf[hi];
      std::mt19937_64 gen(spec.seed);
      while (xs.size() < spec.n_traj) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53 * total;
        const auto it = std::upper_bound(cdf.begin() + lo, cdf.begin() + hi + 1, u);
        const std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), lo + 1, hi);
        const double span = cdf[j] - cdf[j - 1];
        const double frac = span > 0.0 ? (u - cdf[j - 1]) / span : 0.5;
        const double x = ax.coord(j - 1) + frac * dx;
        if (field.density({x, 0.0}, field.params()[k]) <= thr) continue;
        xs.push_back(x);
      }
      break;
    }
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

std::vector<Trajectory> integrate_ensemble(const GuidanceField& field, const EnsembleSpec& spec, Direction direction,
                                           unsigned threads, const IntegratorOptions& options) {
  const auto xs = sample_initial_positions(field, spec, direction);
  std::vector<Trajectory> out(xs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < xs.size(); i = next++) {
      try {
        out[i] = integrate_trajectory(field, {xs[i], 0.0}, direction, default_label(i), options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(xs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

NonCrossingReport check_non_crossing(std::span<const Trajectory> trajectories, double domain_width) {
  NonCrossingReport report;
  report.tolerance = kCrossingTolerance * domain_width;
  std::vector<const Trajectory*> order;
  for (const auto& t : trajectories) {
    if (t.rank != 1) throw Error(ErrorKind::InvalidArgument, "non-crossing check is defined for 1D trajectories");
    if (!t.samples.empty()) order.push_back(&t);
  }
  std::stable_sort(order.begin(), order.end(), [](const Trajectory* a, const Trajectory* b) {
    return a->front().position[0] < b->front().position[0];
  });
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const auto& lower = *order[i];
    const auto& upper = *order[i + 1];
    const std::size_t shared = std::min(lower.samples.size(), upper.samples.size());
    for (std::size_t k = 0; k < shared; ++k) {
      const auto& a = lower.samples[k];
      const auto& b = upper.samples[k];
      if (std::abs(a.param - b.param) > 1e-12 * std::max(1.0, std::abs(a.param))) continue;
      ++report.comparisons;
      const double gap = b.position[0] - a.position[0];
      if (gap >= -report.tolerance) continue;
      ++report.violations;
      if (!report.first || std::abs(a.param - lower.front().param) <
                               std::abs(report.first->param - lower.front().param)) {
        report.first = CrossingViolation{lower.label, upper.label, a.param, gap};
      }
    }
  }
  return report;
}

double ks_distance(std::span<const double> positions, const Grid& grid, std::span<const double> rho) {
  if (positions.empty()) return 1.0;
  const Axis& ax = grid.x();
  const double dx = ax.spacing();
  std::vector<double> cdf(ax.n, 0.0);
  for (std::size_t i = 1; i < ax.n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (rho[i - 1] + rho[i]) * dx;
  const double total = cdf.back();
  auto F = [&](double x) {
    if (x <= ax.min) return 0.0;
    if (x >= ax.max) return 1.0;
    const double s = (x - ax.min) / dx;
    const auto i = std::min(static_cast<std::size_t>(s), ax.n - 2);
    const double frac = s - static_cast<double>(i);
    return (cdf[i] + frac * (cdf[i + 1] - cdf[i])) / total;
  };
  std::vector<double> xs(positions.begin(), positions.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = F(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<double> positions_at(std::span<const Trajectory> trajectories, double param) {
  std::vector<double> xs;
  for (const auto& t : trajectories) {
    if (auto p = t.position_at(param)) xs.push_back((*p)[0]);
  }
  return xs;
}

void write_trajectories_csv(std::ostream& out, std::span<const Trajectory> trajectories) {
  const bool plane = !trajectories.empty() && trajectories.front().rank == 2;
  out << (plane ? "label,t,x,y,vx,vy,status\n" : "label,t,x,vx,status\n");
  for (const auto& t : trajectories) {
    const auto status = to_string(t.status);
    for (const auto& s : t.samples) {
      out << t.label << ',' << format_double(s.param) << ',' << format_double(s.position[0]) << ',';
      if (plane) out << format_double(s.position[1]) << ',';
      out << format_double(s.velocity[0]) << ',';
      if (plane) out << format_double(s.velocity[1]) << ',';
      out << status << '\n';
    }
  }
}

}  // namespace bohmflow
