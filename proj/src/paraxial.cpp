#include "bohmflow/paraxial.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "bohmflow/errors.hpp"
#include "bohmflow/field_io.hpp"
#include "bohmflow/spectral.hpp"

namespace bohmflow {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// 1 inside a core of the given width, 0 outside, logistic edges.
double core_shape(double x, double center, double width, double smoothness) {
  const double a = center - 0.5 * width;
  const double b = center + 0.5 * width;
  if (smoothness <= 0.0) return (x >= a && x <= b) ? 1.0 : 0.0;
  return logistic((x - a) / smoothness) * logistic((b - x) / smoothness);
}

std::size_t lower_index(const std::vector<double>& axis, double v) {
  const auto it = std::upper_bound(axis.begin(), axis.end(), v);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - axis.begin() - 1));
  return std::min(i, axis.size() - 2);
}

const char* geometry_name(IndexProfile::Geometry g) {
  switch (g) {
    case IndexProfile::Geometry::uniform: return "uniform";
    case IndexProfile::Geometry::straight: return "straight";
    case IndexProfile::Geometry::s_bend: return "s_bend";
    case IndexProfile::Geometry::y_junction: return "y_junction";
    case IndexProfile::Geometry::sampled: return "sampled";
  }
  return "unknown";
}

std::string describe(const ParaxialProblem& p) {
  nlohmann::ordered_json j;
  j["kind"] = "paraxial";
  j["geometry"] = geometry_name(p.profile.geometry);
  j["wavelength"] = p.wavelength;
  j["n0"] = p.profile.n0;
  j["k_z"] = p.k_z;
  if (p.profile.geometry != IndexProfile::Geometry::uniform &&
      p.profile.geometry != IndexProfile::Geometry::sampled) {
    j["delta_n"] = p.profile.delta_n;
    j["core_width"] = p.profile.core_width;
  }
  return j.dump();
}

/// Hann-windowed average of U^j psi e^{i beta j h} over a window several beat
/// lengths long, repeated. Components of other propagation constants are
/// suppressed by the window's sidelobe decay on every pass; the mode itself
/// only picks up a scalar.
WaveField filter_mode(const WaveField& mode, const std::vector<double>& v, double h) {
  constexpr int kPasses = 3;
  constexpr double kBeatLengths = 8.0;
  const Grid& grid = mode.grid();
  const double mass = mode.units().mass;
  const double beta = energy_expectation(mode, v);
  const double gap = *std::max_element(v.begin(), v.end()) - beta;
  if (!(gap > 0.0)) return mode;
  const auto steps = static_cast<std::size_t>(std::ceil(kBeatLengths * 2.0 * std::numbers::pi / (gap * h)));

  const auto kx = wavenumbers(grid.x(), false);
  std::vector<cplx> kinetic(kx.size()), kick(v.size());
  for (std::size_t i = 0; i < kx.size(); ++i) kinetic[i] = std::polar(1.0, -kx[i] * kx[i] * h / (2.0 * mass));
  for (std::size_t i = 0; i < v.size(); ++i) kick[i] = std::polar(1.0, -0.5 * v[i] * h);

  FourierTransform fft(grid);
  std::vector<cplx> psi(mode.values().begin(), mode.values().end());
  for (int pass = 0; pass < kPasses; ++pass) {
    std::vector<cplx> acc(psi.size());
    for (std::size_t j = 0; j <= steps; ++j) {
      const double s = std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(steps));
      const cplx w = s * s * std::polar(1.0, beta * h * static_cast<double>(j));
      for (std::size_t i = 0; i < psi.size(); ++i) acc[i] += w * psi[i];
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kick[i];
      fft.forward(psi);
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kinetic[i];
      fft.backward(psi);
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kick[i];
    }
    // Remove the common phase so a real mode stays real.
    std::size_t peak = 0;
    for (std::size_t i = 1; i < acc.size(); ++i) {
      if (std::norm(acc[i]) > std::norm(acc[peak])) peak = i;
    }
    const cplx phase = std::conj(acc[peak]) / std::abs(acc[peak]);
    for (auto& a : acc) a *= phase;
    psi = std::move(acc);
  }
  return mode.with_values(std::move(psi), mode.param()).normalized();
}

}  // namespace

std::vector<double> IndexProfile::core_centers(double z) const {
  switch (geometry) {
    case Geometry::uniform:
    case Geometry::sampled: return {};
    case Geometry::straight: return {core_center};
    case Geometry::s_bend: {
      if (bend_end <= bend_start) return {core_center + (z >= bend_end ? bend_offset : 0.0)};
      const double s = std::clamp((z - bend_start) / (bend_end - bend_start), 0.0, 1.0);
      return {core_center + 0.5 * bend_offset * (1.0 - std::cos(std::numbers::pi * s))};
    }
    case Geometry::y_junction: {
      if (z <= split_z) return {core_center};
      const double d = (z - split_z) * std::tan(half_angle_deg * std::numbers::pi / 180.0);
      return {core_center - d, core_center + d};
    }
  }
  return {};
}

double IndexProfile::index(double x, double z) const {
  if (geometry == Geometry::uniform) return n0;
  if (geometry == Geometry::sampled) {
    const std::size_t nx = sample_x.size();
    const double xc = std::clamp(x, sample_x.front(), sample_x.back());
    const double zc = std::clamp(z, sample_z.front(), sample_z.back());
    const std::size_t i = lower_index(sample_x, xc);
    const std::size_t k = lower_index(sample_z, zc);
    const double a = (xc - sample_x[i]) / (sample_x[i + 1] - sample_x[i]);
    const double b = (zc - sample_z[k]) / (sample_z[k + 1] - sample_z[k]);
    const auto at = [&](std::size_t kk, std::size_t ii) { return sample_n[kk * nx + ii]; };
    return (1 - b) * ((1 - a) * at(k, i) + a * at(k, i + 1)) + b * ((1 - a) * at(k + 1, i) + a * at(k + 1, i + 1));
  }
  double shape = 0.0;
  for (double c : core_centers(z)) shape = std::max(shape, core_shape(x, c, core_width, edge_smoothness));
  return n0 + delta_n * shape;
}

bool IndexProfile::z_dependent() const {
  switch (geometry) {
    case Geometry::uniform:
    case Geometry::straight: return false;
    case Geometry::s_bend: return bend_offset != 0.0;
    case Geometry::y_junction: return true;
    case Geometry::sampled: return sample_z.size() > 1;
  }
  return true;
}

IndexProfile load_index_csv(const std::filesystem::path& path, double n0) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open index file " + path.string());
  std::string line;
  std::getline(in, line);
  line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
             line.end());
  if (line != "x,z,n") throw Error(ErrorKind::Io, path.string() + ": expected header \"x,z,n\"");

  std::map<std::pair<double, double>, double> cells;  // (z, x) -> n
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[3];
    char comma = 0;
    if (!(ls >> v[0] >> comma >> v[1] >> comma >> v[2])) {
      throw Error(ErrorKind::Io, path.string() + ": malformed row " + std::to_string(row));
    }
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2]) || v[2] < 1.0) {
      throw Error(ErrorKind::InvalidArgument, path.string() + ": row " + std::to_string(row) + " needs finite values and n >= 1");
    }
    if (!cells.emplace(std::pair{v[1], v[0]}, v[2]).second) {
      throw Error(ErrorKind::InvalidArgument, path.string() + ": duplicate point at row " + std::to_string(row));
    }
  }

  IndexProfile p;
  p.geometry = IndexProfile::Geometry::sampled;
  p.n0 = n0;
  for (const auto& [key, n] : cells) {
    if (p.sample_z.empty() || p.sample_z.back() != key.first) p.sample_z.push_back(key.first);
    if (p.sample_z.size() == 1) p.sample_x.push_back(key.second);
  }
  if (p.sample_x.size() < 2 || p.sample_z.size() < 2 || cells.size() != p.sample_x.size() * p.sample_z.size()) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": index samples must form a full lattice of at least 2 x 2");
  }
  p.sample_n.reserve(cells.size());
  std::size_t i = 0;
  for (const auto& [key, n] : cells) {
    if (key.second != p.sample_x[i % p.sample_x.size()]) {
      throw Error(ErrorKind::InvalidArgument, path.string() + ": x samples differ between z rows");
    }
    p.sample_n.push_back(n);
    ++i;
  }
  return p;
}

std::vector<double> ParaxialProblem::effective_potential(const Grid& grid, double z) const {
  std::vector<double> v(grid.size());
  const std::size_t nx = grid.x().n;
  const double n0 = profile.n0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double n = profile.index(grid.x().coord(i % nx), z);
    v[i] = k / (2.0 * n0) * (n0 * n0 - n * n);
  }
  return v;
}

ParaxialProblem reduce_to_paraxial(const IndexProfile& profile, double wavelength, const Grid& grid,
                                   double z_extent) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw Error(ErrorKind::InvalidArgument, "wavelength must be positive");
  }
  if (!(profile.n0 >= 1.0)) throw Error(ErrorKind::InvalidArgument, "bulk index n0 must be >= 1");
  if (grid.rank() != 1) throw Error(ErrorKind::InvalidArgument, "paraxial propagation uses a 1D transverse grid");
  if (profile.geometry == IndexProfile::Geometry::sampled &&
      (profile.sample_x.size() < 2 || profile.sample_z.size() < 2 ||
       profile.sample_n.size() != profile.sample_x.size() * profile.sample_z.size())) {
    throw Error(ErrorKind::InvalidArgument, "sampled index profile is not a full lattice");
  }
  if (profile.geometry != IndexProfile::Geometry::uniform &&
      profile.geometry != IndexProfile::Geometry::sampled && !(profile.core_width > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "core_width must be positive");
  }

  // Probe the profile along z densely enough to catch every geometry change.
  std::vector<double> zs{0.0};
  if (z_extent > 0.0) {
    constexpr int kProbes = 256;
    for (int s = 1; s <= kProbes; ++s) zs.push_back(z_extent * s / kProbes);
    for (double z : profile.sample_z) {
      if (z > 0.0 && z < z_extent) zs.push_back(z);
    }
  }
  const std::size_t nx = grid.x().n;
  double contrast = 0.0;
  for (double z : zs) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double n = profile.index(grid.x().coord(i), z);
      if (!std::isfinite(n) || n < 1.0) {
        throw Error(ErrorKind::InvalidArgument, "refractive index must be finite and >= 1 (got " + format_double(n) +
                                                    " at x=" + format_double(grid.x().coord(i)) + ")");
      }
      contrast = std::max(contrast, std::abs(n - profile.n0) / profile.n0);
    }
  }
  if (contrast >= kParaxialContrastLimit) {
    throw Error(ErrorKind::ParaxialViolation, "index contrast " + format_double(contrast) + " reaches the paraxial limit " +
                                                  format_double(kParaxialContrastLimit));
  }

  ParaxialProblem p;
  p.wavelength = wavelength;
  p.k = 2.0 * std::numbers::pi / wavelength;
  p.k_z = profile.n0 * p.k;
  p.units = Units{.hbar = 1.0, .mass = p.k_z};
  p.profile = profile;
  return p;
}

PropagationRecord propagate_z(const WaveField& field, const ParaxialProblem& problem,
                              const PropagationControls& controls) {
  const WaveField start(field.grid(), {field.values().begin(), field.values().end()}, field.param(), Mode::optics,
                        problem.units);
  const Grid grid = field.grid();
  if (!problem.profile.z_dependent()) {
    const auto v = problem.effective_potential(grid, 0.0);
    return propagate_scheduled(
        start, [&v](double) { return v; }, controls, describe(problem));
  }
  return propagate_scheduled(
      start, [&](double z) { return problem.effective_potential(grid, z); }, controls, describe(problem));
}

PropagationRecord propagate_z(const WaveField& field, const ParaxialProblem& problem, double dz, double z_final,
                              std::size_t record_every) {
  PropagationControls c;
  c.dt = dz;
  c.t_final = z_final;
  c.record_every = record_every;
  return propagate_z(field, problem, c);
}

WaveField fundamental_mode(const Grid& grid, const ParaxialProblem& problem, double z,
                           const RelaxationOptions& options, double step) {
  const auto v = problem.effective_potential(grid, z);
  // Start from a Gaussian on the centroid of the well.
  const std::size_t nx = grid.x().n;
  const double vmax = *std::max_element(v.begin(), v.end());
  double weight = 0.0, moment = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    weight += vmax - v[i];
    moment += (vmax - v[i]) * grid.x().coord(i);
  }
  const double center = weight > 0.0 ? moment / weight : 0.5 * (grid.x().min + grid.x().max);
  const double width = problem.profile.core_width > 0.0 ? problem.profile.core_width : 0.1 * grid.x().width();
  std::vector<cplx> guess(grid.size());
  for (std::size_t i = 0; i < nx; ++i) {
    const double u = (grid.x().coord(i) - center) / width;
    guess[i] = std::exp(-u * u);
  }
  const WaveField seed = WaveField(grid, std::move(guess), z, Mode::optics, problem.units).normalized();
  const WaveField relaxed = relax_ground_state(seed, v, options);
  return step > 0.0 ? filter_mode(relaxed, v, step) : relaxed;
}

StreamlineBundle optical_streamlines(const PropagationRecord& record, const EnsembleSpec& ensemble,
                                     unsigned threads) {
  if (record.snapshots.front().mode() != Mode::optics) {
    throw Error(ErrorKind::InvalidArgument, "optical streamlines need an optics-mode record");
  }
  const RecordGuidance guidance(record);
  StreamlineBundle out;
  out.streamlines = integrate_ensemble(guidance, ensemble, Direction::forward, threads);
  out.crossing = check_non_crossing(out.streamlines, record.grid().x().width());
  return out;
}

ArmSplit arm_power_split(const WaveField& field, double axis) {
  if (field.grid().rank() != 1) throw Error(ErrorKind::InvalidArgument, "arm split is defined on 1D fields");
  const Axis& ax = field.grid().x();
  const auto values = field.values();
  ArmSplit s{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < ax.n; ++i) {
    const double x = ax.coord(i);
    const double p = std::norm(values[i]) * ax.spacing();
    // A sample exactly on the axis is shared equally.
    if (x < axis) s.left += p;
    else if (x > axis) s.right += p;
    else {
      s.left += 0.5 * p;
      s.right += 0.5 * p;
    }
  }
  s.total = s.left + s.right;
  return s;
}

}  // namespace bohmflow
