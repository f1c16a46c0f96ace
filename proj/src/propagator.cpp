#include "bohmflow/propagator.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "bohmflow/analytic_packets.hpp"
#include "bohmflow/errors.hpp"
#include "bohmflow/field_io.hpp"
#include "bohmflow/spectral.hpp"

namespace bohmflow {

namespace {

const std::complex<double> I(0.0, 1.0);

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// |k|^2 on the grid in FFT order.
std::vector<double> k_squared(const Grid& grid) {
  const auto kx = wavenumbers(grid.x(), false);
  const auto ky = grid.rank() == 2 ? wavenumbers(grid.y(), false) : std::vector<double>(1, 0.0);
  const std::size_t nx = kx.size();
  std::vector<double> k2(grid.size());
  for (std::size_t i = 0; i < k2.size(); ++i) {
    const double a = kx[i % nx];
    const double b = ky[i / nx];
    k2[i] = a * a + b * b;
  }
  return k2;
}

}  // namespace

double BarrierSpec::operator()(double x) const {
  const double a = left_edge();
  const double b = right_edge();
  if (edge_smoothness <= 0.0) return (x >= a && x <= b) ? height : 0.0;
  return height * logistic((x - a) / edge_smoothness) * logistic((b - x) / edge_smoothness);
}

Potential Potential::barrier(const BarrierSpec& spec) {
  if (!(spec.width > 0.0) || !std::isfinite(spec.height) || !(spec.edge_smoothness >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "barrier needs width > 0, finite height, edge_smoothness >= 0");
  }
  return Potential(Kind::barrier, spec, {});
}

Potential Potential::sampled(std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "sampled potential must be finite");
  }
  return Potential(Kind::sampled, {}, std::move(values));
}

std::vector<double> Potential::sample(const Grid& grid) const {
  switch (kind_) {
    case Kind::free: return std::vector<double>(grid.size(), 0.0);
    case Kind::barrier: {
      std::vector<double> v(grid.size());
      const std::size_t nx = grid.x().n;
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = barrier_(grid.x().coord(i % nx));
      return v;
    }
    case Kind::sampled:
      if (values_.size() != grid.size()) {
        throw Error(ErrorKind::GridMismatch, "sampled potential does not match the grid size");
      }
      return values_;
  }
  return {};
}

std::string Potential::describe() const {
  nlohmann::ordered_json j;
  switch (kind_) {
    case Kind::free: j["kind"] = "free"; break;
    case Kind::barrier:
      j["kind"] = "barrier";
      j["center"] = barrier_.center;
      j["width"] = barrier_.width;
      j["height"] = barrier_.height;
      j["edge_smoothness"] = barrier_.edge_smoothness;
      break;
    case Kind::sampled:
      j["kind"] = "sampled";
      j["points"] = values_.size();
      break;
  }
  return j.dump();
}

std::vector<double> absorber_profile(const Grid& grid, const AbsorberSpec& spec) {
  std::vector<double> w(grid.size(), 0.0);
  if (spec.width <= 0.0 || spec.strength <= 0.0) return w;
  const Axis& ax = grid.x();
  const std::size_t nx = ax.n;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = ax.coord(i % nx);
    const double depth = std::max(ax.min + spec.width - x, x - (ax.max - spec.width));
    if (depth <= 0.0) continue;
    const double s = std::sin(0.5 * std::numbers::pi * std::min(1.0, depth / spec.width));
    w[i] = spec.strength * s * s;
  }
  return w;
}

std::vector<double> PropagationRecord::params() const {
  std::vector<double> p;
  p.reserve(snapshots.size());
  for (const auto& s : snapshots) p.push_back(s.param());
  return p;
}

PropagationRecord decimate(const PropagationRecord& record, std::size_t stride) {
  const std::size_t intervals = record.snapshots.size() - 1;
  if (stride == 0 || intervals % stride != 0) {
    throw Error(ErrorKind::InvalidArgument, "stride must divide the number of snapshot intervals");
  }
  PropagationRecord out = record;
  out.snapshots.clear();
  for (std::size_t k = 0; k <= intervals; k += stride) out.snapshots.push_back(record.snapshots[k]);
  out.record_interval = record.record_interval * static_cast<double>(stride);
  return out;
}

PropagationRecord propagate_scheduled(const WaveField& initial, const PotentialSchedule& schedule,
                                      const PropagationControls& c, std::string potential_description) {
  if (!(c.dt > 0.0) || !(c.t_final > 0.0) || c.record_every == 0) {
    throw Error(ErrorKind::InvalidArgument, "propagation needs dt > 0, t_final > 0, record_every >= 1");
  }
  const Grid& grid = initial.grid();
  const double hbar = initial.units().hbar;
  const double mass = initial.units().mass;
  const double start = initial.param();
  const bool absorbing = c.absorber && c.absorber->width > 0.0 && c.absorber->strength > 0.0;

  const auto records = static_cast<std::size_t>(std::ceil(c.t_final / (c.dt * c.record_every) - 1e-9));
  const std::size_t steps = std::max<std::size_t>(1, records) * c.record_every;
  const double dt = c.t_final / static_cast<double>(steps);

  const auto k2 = k_squared(grid);
  std::vector<std::complex<double>> kinetic(grid.size());
  for (std::size_t i = 0; i < k2.size(); ++i) kinetic[i] = std::exp(-I * hbar * k2[i] * dt / (2.0 * mass));

  const auto damping = absorbing ? absorber_profile(grid, *c.absorber) : std::vector<double>(grid.size(), 0.0);
  std::vector<double> current_v;
  std::vector<std::complex<double>> half_kick(grid.size());
  auto update_kick = [&](double param) {
    auto v = schedule(param);
    if (v.size() != grid.size()) throw Error(ErrorKind::GridMismatch, "potential does not match the grid");
    if (v == current_v) return;
    current_v = std::move(v);
    for (std::size_t i = 0; i < half_kick.size(); ++i) {
      half_kick[i] = std::exp(-I * current_v[i] * dt / (2.0 * hbar) - damping[i] * dt / (2.0 * hbar));
    }
  };

  PropagationRecord rec;
  rec.dt = dt;
  rec.record_interval = dt * static_cast<double>(c.record_every);
  rec.t_final = c.t_final;
  rec.absorbing = absorbing;
  rec.potential = schedule(start);
  rec.potential_description = std::move(potential_description);
  rec.snapshots.reserve(steps / c.record_every + 1);
  rec.snapshots.push_back(initial);

  const double norm0 = norm(initial);
  if (std::abs(norm0 - 1.0) > 1e-6) throw Error(ErrorKind::InvalidArgument, "initial field is not normalized");

  FourierTransform fft(grid);
  std::vector<std::complex<double>> psi(initial.values().begin(), initial.values().end());
  for (std::size_t step = 1; step <= steps; ++step) {
    update_kick(start + (static_cast<double>(step) - 0.5) * dt);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= half_kick[i];
    fft.forward(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kinetic[i];
    fft.backward(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= half_kick[i];

    if (step % c.record_every != 0) continue;
    const double param = start + c.t_final * static_cast<double>(step) / static_cast<double>(steps);
    WaveField snap = initial.with_values(psi, param);
    const double drift = std::abs(norm(snap) - norm0);
    rec.norm_drift = std::max(rec.norm_drift, drift);
    if (!absorbing) {
      if (drift > c.norm_tolerance) {
        throw Error(ErrorKind::UnstableStep, "norm drifted by " + format_double(drift) + " at " + format_double(param));
      }
      const double edge = edge_amplitude_ratio(snap);
      if (edge > c.boundary_tolerance) {
        throw Error(ErrorKind::BoundaryContamination,
                    "edge amplitude reached " + format_double(edge) + " of the peak at " + format_double(param));
      }
    }
    rec.snapshots.push_back(std::move(snap));
  }
  return rec;
}

PropagationRecord propagate(const WaveField& initial, const Potential& potential, const PropagationControls& c) {
  const auto samples = potential.sample(initial.grid());
  return propagate_scheduled(
      initial, [&samples](double) { return samples; }, c, potential.describe());
}

double energy_expectation(const WaveField& field, std::span<const double> potential) {
  const Grid& grid = field.grid();
  const double hbar = field.units().hbar;
  const double mass = field.units().mass;
  std::vector<std::complex<double>> psi(field.values().begin(), field.values().end());
  double pot = 0.0, weight = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    pot += potential[i] * std::norm(psi[i]);
    weight += std::norm(psi[i]);
  }
  FourierTransform fft(grid);
  fft.forward(psi);
  const auto k2 = k_squared(grid);
  double kin = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) kin += hbar * hbar * k2[i] / (2.0 * mass) * std::norm(psi[i]);
  kin /= static_cast<double>(psi.size());
  return (kin + pot) / weight;
}

WaveField relax_ground_state(const WaveField& guess, std::span<const double> potential, const RelaxationOptions& o) {
  const Grid& grid = guess.grid();
  if (potential.size() != grid.size()) throw Error(ErrorKind::GridMismatch, "potential does not match the grid");
  const double hbar = guess.units().hbar;
  const double mass = guess.units().mass;
  const double dtau = o.dtau;
  const auto k2 = k_squared(grid);
  std::vector<double> kinetic(grid.size()), half(grid.size());
  for (std::size_t i = 0; i < k2.size(); ++i) kinetic[i] = std::exp(-hbar * k2[i] * dtau / (2.0 * mass));
  double vmin = 0.0;
  for (double v : potential) vmin = std::min(vmin, v);
  for (std::size_t i = 0; i < half.size(); ++i) half[i] = std::exp(-(potential[i] - vmin) * dtau / (2.0 * hbar));

  FourierTransform fft(grid);
  std::vector<std::complex<double>> psi(guess.values().begin(), guess.values().end());
  std::vector<std::complex<double>> previous = psi;
  const double dv = grid.cell_volume();
  auto renormalize = [&] {
    double s = 0.0;
    for (const auto& z : psi) s += std::norm(z);
    const double scale = 1.0 / std::sqrt(s * dv);
    for (auto& z : psi) z *= scale;
  };
  renormalize();
  for (std::size_t step = 1; step <= o.max_steps; ++step) {
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= half[i];
    fft.forward(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kinetic[i];
    fft.backward(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= half[i];
    renormalize();
    if (step % o.check_every != 0) continue;
    double change = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) change += std::norm(psi[i] - previous[i]);
    previous = psi;
    if (std::sqrt(change * dv) < o.state_tolerance) break;
  }
  return guess.with_values(std::move(psi), guess.param());
}

void save_record(const std::filesystem::path& dir, const PropagationRecord& record) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  const Grid& g = record.grid();
  manifest["format"] = "bohmflow-record";
  manifest["version"] = 1;
  manifest["grid"] = {{"x_min", g.x().min}, {"x_max", g.x().max}, {"n", g.x().n}};
  if (g.rank() == 2) manifest["grid"].update({{"y_min", g.y().min}, {"y_max", g.y().max}, {"ny", g.y().n}});
  manifest["dt"] = record.dt;
  manifest["record_interval"] = record.record_interval;
  manifest["t_final"] = record.t_final;
  manifest["norm_drift"] = record.norm_drift;
  manifest["absorbing"] = record.absorbing;
  manifest["potential"] = record.potential_description.empty()
                              ? nlohmann::ordered_json()
                              : nlohmann::ordered_json::parse(record.potential_description);
  {
    std::ofstream pot(dir / "potential.csv");
    pot << "x,V\n";
    const std::size_t nx = g.x().n;
    for (std::size_t i = 0; i < record.potential.size(); ++i) {
      pot << format_double(g.x().coord(i % nx)) << ',' << format_double(record.potential[i]) << '\n';
    }
  }
  manifest["potential_samples"] = {{"file", "potential.csv"}, {"checksum", file_checksum(dir / "potential.csv")}};
  auto& snaps = manifest["snapshots"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < record.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "snapshot_" << std::setw(6) << std::setfill('0') << k << ".bfwf";
    save_snapshot(dir / name.str(), record.snapshots[k]);
    snaps.push_back({{"file", name.str()},
                     {"param", record.snapshots[k].param()},
                     {"checksum", file_checksum(dir / name.str())}});
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

PropagationRecord load_record(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error(ErrorKind::Io, "missing manifest.json in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  PropagationRecord rec;
  rec.dt = manifest.at("dt").get<double>();
  rec.record_interval = manifest.at("record_interval").get<double>();
  rec.t_final = manifest.at("t_final").get<double>();
  rec.norm_drift = manifest.at("norm_drift").get<double>();
  rec.absorbing = manifest.at("absorbing").get<bool>();
  if (!manifest.at("potential").is_null()) rec.potential_description = manifest.at("potential").dump();
  for (const auto& s : manifest.at("snapshots")) {
    const auto path = dir / s.at("file").get<std::string>();
    if (file_checksum(path) != s.at("checksum").get<std::string>()) {
      throw Error(ErrorKind::Io, "checksum mismatch for " + path.string());
    }
    rec.snapshots.push_back(load_snapshot(path));
  }
  if (rec.snapshots.empty()) throw Error(ErrorKind::Io, "record has no snapshots");
  std::ifstream pot(dir / "potential.csv");
  std::string line;
  std::getline(pot, line);
  while (std::getline(pot, line)) {
    const auto comma = line.find(',');
    if (comma != std::string::npos) rec.potential.push_back(std::stod(line.substr(comma + 1)));
  }
  return rec;
}

ScatteringScenario make_barrier_scenario() {
  // Tuned once so transmission, reflection and the intra-barrier transient are all sizeable.
  const Grid grid = Grid::line(-120.0, 120.0, 2048);
  const double amp = 1.0 / std::sqrt(2.0);
  const GaussianSpec packets[2] = {
      {.x0 = -30.0, .p0 = 3.0, .sigma0 = 3.0, .weight = {amp, 0.0}},
      {.x0 = -25.0, .p0 = 3.0, .sigma0 = 1.5, .weight = {amp, 0.0}},
  };
  WaveField initial = superposition_field(packets, grid, 0.0);
  const BarrierSpec barrier{.center = 0.0, .width = 1.0, .height = 5.0, .edge_smoothness = 0.15};
  PropagationControls controls;
  controls.dt = 0.005;
  controls.t_final = 20.0;
  controls.record_every = 4;
  return {std::move(initial), Potential::barrier(barrier), controls};
}

}  // namespace bohmflow
