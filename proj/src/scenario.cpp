#include "bohmflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "bohmflow/errors.hpp"
#include "bohmflow/field_io.hpp"
#include "bohmflow/hydro.hpp"
#include "bohmflow/tubes.hpp"

#ifndef BOHMFLOW_VERSION
#define BOHMFLOW_VERSION "0.0.0"
#endif

namespace bohmflow {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Config, where + ": " + what);
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

const json& require_object(const json& j, const std::string& where) {
  if (!j.is_object()) config_error(where, "expected an object");
  return j;
}

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) config_error(join(where, key), "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& where, const char* key) {
  const json* v = find(obj, key);
  if (!v) config_error(join(where, key), "required key is missing");
  return *v;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) config_error(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(where, "must be finite");
  return d;
}

double number(const json& obj, const std::string& where, const char* key, std::optional<double> fallback = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) config_error(join(where, key), "required key is missing");
    return *fallback;
  }
  return as_number(*v, join(where, key));
}

double positive(const json& obj, const std::string& where, const char* key, std::optional<double> fallback = {}) {
  const double d = number(obj, where, key, fallback);
  if (!(d > 0.0)) config_error(join(where, key), "must be positive (got " + format_double(d) + ")");
  return d;
}

std::uint64_t count(const json& obj, const std::string& where, const char* key, std::optional<std::uint64_t> fallback = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) config_error(join(where, key), "required key is missing");
    return *fallback;
  }
  if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
    config_error(join(where, key), "expected a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

bool flag(const json& obj, const std::string& where, const char* key) {
  const json* v = find(obj, key);
  if (!v) return false;
  if (!v->is_boolean()) config_error(join(where, key), "expected true or false");
  return v->get<bool>();
}

std::string text(const json& obj, const std::string& where, const char* key, std::optional<std::string> fallback = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (!fallback) config_error(join(where, key), "required key is missing");
    return *fallback;
  }
  if (!v->is_string()) config_error(join(where, key), "expected a string");
  return v->get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

GaussianSpec parse_packet(const json& j, const std::string& where, const Units& units) {
  require_object(j, where);
  allow_keys(j, where, {"x0", "p0", "sigma0", "weight"});
  GaussianSpec g;
  g.x0 = number(j, where, "x0");
  g.p0 = number(j, where, "p0", 0.0);
  g.sigma0 = positive(j, where, "sigma0");
  g.mass = units.mass;
  g.hbar = units.hbar;
  if (const json* w = find(j, "weight")) {
    if (!w->is_array() || w->size() != 2) config_error(join(where, "weight"), "expected [re, im]");
    g.weight = {as_number((*w)[0], join(where, "weight[0]")), as_number((*w)[1], join(where, "weight[1]"))};
  }
  return g;
}

IndexProfile parse_profile(const json& j, const std::string& where, const std::filesystem::path& base) {
  require_object(j, where);
  allow_keys(j, where,
             {"geometry", "n0", "delta_n", "core_width", "core_center", "edge_smoothness", "bend_start", "bend_end",
              "bend_offset", "split_z", "half_angle_deg", "path"});
  const std::string geometry = text(j, where, "geometry");
  const double n0 = number(j, where, "n0", 1.5);
  if (!(n0 >= 1.0)) config_error(join(where, "n0"), "bulk index must be >= 1");
  if (geometry == "sampled") {
    const std::string path = text(j, where, "path");
    try {
      return load_index_csv(resolve(base, path), n0);
    } catch (const Error& e) {
      config_error(join(where, "path"), e.what());
    }
  }
  IndexProfile p;
  p.n0 = n0;
  if (geometry == "uniform") p.geometry = IndexProfile::Geometry::uniform;
  else if (geometry == "straight") p.geometry = IndexProfile::Geometry::straight;
  else if (geometry == "s_bend") p.geometry = IndexProfile::Geometry::s_bend;
  else if (geometry == "y_junction") p.geometry = IndexProfile::Geometry::y_junction;
  else config_error(join(where, "geometry"), "expected uniform, straight, s_bend, y_junction or sampled");
  p.delta_n = number(j, where, "delta_n", p.delta_n);
  p.core_width = positive(j, where, "core_width", p.core_width);
  p.core_center = number(j, where, "core_center", p.core_center);
  p.edge_smoothness = number(j, where, "edge_smoothness", p.edge_smoothness);
  if (p.edge_smoothness < 0.0) config_error(join(where, "edge_smoothness"), "must be >= 0");
  p.bend_start = number(j, where, "bend_start", p.bend_start);
  p.bend_end = number(j, where, "bend_end", p.bend_end);
  p.bend_offset = number(j, where, "bend_offset", p.bend_offset);
  p.split_z = number(j, where, "split_z", p.split_z);
  p.half_angle_deg = number(j, where, "half_angle_deg", p.half_angle_deg);
  if (p.half_angle_deg < 0.0 || p.half_angle_deg > 1.0) {
    config_error(join(where, "half_angle_deg"), "arm half-angle must lie in [0, 1] degrees to stay paraxial");
  }
  return p;
}

EnsembleSpec parse_ensemble(const json& j, const std::string& where) {
  require_object(j, where);
  allow_keys(j, where, {"n_traj", "sampling", "interval", "positions"});
  EnsembleSpec e;
  const std::string sampling = text(j, where, "sampling", "rho_weighted");
  if (sampling == "rho_weighted") e.sampling = Sampling::rho_weighted;
  else if (sampling == "uniform_in_interval") e.sampling = Sampling::uniform_in_interval;
  else if (sampling == "explicit_list") e.sampling = Sampling::explicit_list;
  else config_error(join(where, "sampling"), "expected rho_weighted, uniform_in_interval or explicit_list");
  if (e.sampling == Sampling::explicit_list) {
    const json& pos = require(j, where, "positions");
    if (!pos.is_array() || pos.empty()) config_error(join(where, "positions"), "expected a non-empty array");
    for (std::size_t i = 0; i < pos.size(); ++i) {
      e.positions.push_back(as_number(pos[i], join(where, "positions[" + std::to_string(i) + "]")));
    }
    e.n_traj = e.positions.size();
    return e;
  }
  e.n_traj = count(j, where, "n_traj");
  if (e.n_traj == 0) config_error(join(where, "n_traj"), "must be at least 1");
  if (e.sampling == Sampling::uniform_in_interval) {
    const json& iv = require(j, where, "interval");
    if (!iv.is_array() || iv.size() != 2) config_error(join(where, "interval"), "expected [lo, hi]");
    e.interval_lo = as_number(iv[0], join(where, "interval[0]"));
    e.interval_hi = as_number(iv[1], join(where, "interval[1]"));
    if (!(e.interval_hi > e.interval_lo)) config_error(join(where, "interval"), "needs lo < hi");
  }
  return e;
}

AnalysesConfig parse_analyses(const json& j, const std::string& where) {
  require_object(j, where);
  allow_keys(j, where,
             {"ensemble", "contrast", "non_crossing", "regions", "separatrix", "tubes", "statistics", "arm_split"});
  AnalysesConfig a;
  if (const json* e = find(j, "ensemble")) a.ensemble = parse_ensemble(*e, join(where, "ensemble"));
  if (const json* c = find(j, "contrast")) {
    const std::string w = join(where, "contrast");
    require_object(*c, w);
    allow_keys(*c, w, {"per_packet"});
    a.contrast_per_packet = count(*c, w, "per_packet");
    if (a.contrast_per_packet == 0) config_error(join(w, "per_packet"), "must be at least 1");
  }
  a.non_crossing = flag(j, where, "non_crossing");
  a.regions = flag(j, where, "regions");
  a.separatrix = flag(j, where, "separatrix");
  a.tubes = flag(j, where, "tubes");
  a.statistics = flag(j, where, "statistics");
  if (const json* s = find(j, "arm_split")) {
    const std::string w = join(where, "arm_split");
    require_object(*s, w);
    allow_keys(*s, w, {"axis", "expected_left_fraction", "tolerance"});
    a.arm_split = true;
    a.arm_axis = number(*s, w, "axis", 0.0);
    if (find(*s, "expected_left_fraction")) {
      a.expected_left_fraction = number(*s, w, "expected_left_fraction");
      if (*a.expected_left_fraction < 0.0 || *a.expected_left_fraction > 1.0) {
        config_error(join(w, "expected_left_fraction"), "must lie in [0, 1]");
      }
    }
    a.arm_tolerance = positive(*s, w, "tolerance", a.arm_tolerance);
  }
  if (a.tubes) a.separatrix = true;
  if (a.non_crossing && !a.ensemble) config_error(join(where, "non_crossing"), "needs analyses.ensemble");
  if (a.statistics && (!a.ensemble || a.ensemble->sampling != Sampling::rho_weighted)) {
    config_error(join(where, "statistics"), "needs a rho_weighted analyses.ensemble");
  }
  return a;
}

}  // namespace

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base) {
  require_object(doc, "<root>");
  allow_keys(doc, "",
             {"$schema", "name", "description", "mode", "seed", "units", "grid", "initial", "potential", "optics",
              "propagation", "analyses", "output"});
  ScenarioConfig c;
  c.source = doc;
  c.name = text(doc, "", "name");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
    config_error("name", "must be a non-empty plain file name");
  }
  const std::string mode = text(doc, "", "mode", "quantum");
  if (mode == "quantum") c.mode = Mode::quantum;
  else if (mode == "optics") c.mode = Mode::optics;
  else config_error("mode", "expected quantum or optics");
  c.seed = count(doc, "", "seed", 1);
  if (const json* o = find(doc, "output")) {
    if (!o->is_string()) config_error("output", "expected a string");
    c.output = resolve(base, o->get<std::string>());
  }
  if (const json* d = find(doc, "description"); d && !d->is_string()) config_error("description", "expected a string");

  if (const json* u = find(doc, "units")) {
    if (c.mode == Mode::optics) config_error("units", "optics runs derive their units from the wavelength");
    require_object(*u, "units");
    allow_keys(*u, "units", {"hbar", "mass"});
    c.units.hbar = positive(*u, "units", "hbar", 1.0);
    c.units.mass = positive(*u, "units", "mass", 1.0);
  }

  {
    const json& g = require_object(require(doc, "", "grid"), "grid");
    allow_keys(g, "grid", {"x_min", "x_max", "n"});
    c.grid.min = number(g, "grid", "x_min");
    c.grid.max = number(g, "grid", "x_max");
    c.grid.n = count(g, "grid", "n");
    if (!(c.grid.max > c.grid.min)) config_error("grid.x_max", "must exceed grid.x_min");
    if (c.grid.n < 8) config_error("grid.n", "needs at least 8 points (got " + std::to_string(c.grid.n) + ")");
    if (!is_power_of_two(c.grid.n)) {
      config_error("grid.n", std::to_string(c.grid.n) + " is not a power of two (the FFT grid requires one)");
    }
  }

  if (c.mode == Mode::optics) {
    if (find(doc, "potential")) config_error("potential", "optics runs take their potential from optics.profile");
    const json& o = require_object(require(doc, "", "optics"), "optics");
    allow_keys(o, "optics", {"wavelength", "profile"});
    OpticsConfig oc;
    oc.wavelength = positive(o, "optics", "wavelength");
    oc.profile = parse_profile(require(o, "optics", "profile"), "optics.profile", base);
    c.optics = oc;
    const double k_z = oc.profile.n0 * 2.0 * std::numbers::pi / oc.wavelength;
    c.units = Units{.hbar = 1.0, .mass = k_z};
  } else {
    if (find(doc, "optics")) config_error("optics", "only valid with mode \"optics\"");
    if (const json* p = find(doc, "potential")) {
      require_object(*p, "potential");
      const std::string kind = text(*p, "potential", "kind");
      if (kind == "free") {
        allow_keys(*p, "potential", {"kind"});
      } else if (kind == "barrier") {
        allow_keys(*p, "potential", {"kind", "center", "width", "height", "edge_smoothness"});
        BarrierSpec b;
        b.center = number(*p, "potential", "center", 0.0);
        b.width = positive(*p, "potential", "width");
        b.height = number(*p, "potential", "height");
        b.edge_smoothness = number(*p, "potential", "edge_smoothness", 0.0);
        if (b.edge_smoothness < 0.0) config_error("potential.edge_smoothness", "must be >= 0");
        c.potential = Potential::barrier(b);
      } else if (kind == "sampled") {
        allow_keys(*p, "potential", {"kind", "path"});
        const auto path = resolve(base, text(*p, "potential", "path"));
        std::ifstream in(path);
        if (!in) config_error("potential.path", "cannot open " + path.string());
        std::string line;
        std::getline(in, line);
        std::vector<double> values;
        while (std::getline(in, line)) {
          const auto comma = line.find(',');
          if (comma == std::string::npos) continue;
          try {
            values.push_back(std::stod(line.substr(comma + 1)));
          } catch (const std::exception&) {
            config_error("potential.path", "malformed row in " + path.string());
          }
        }
        if (values.size() != c.grid.n) {
          config_error("potential.path", "has " + std::to_string(values.size()) + " samples, grid.n is " +
                                             std::to_string(c.grid.n));
        }
        c.potential = Potential::sampled(std::move(values));
      } else {
        config_error("potential.kind", "expected free, barrier or sampled");
      }
    }
  }

  {
    const json& i = require_object(require(doc, "", "initial"), "initial");
    const std::string kind = text(i, "initial", "kind");
    if (kind == "packets") {
      allow_keys(i, "initial", {"kind", "packets"});
      c.initial = InitialKind::packets;
      const json& ps = require(i, "initial", "packets");
      if (!ps.is_array() || ps.empty()) config_error("initial.packets", "expected a non-empty array");
      for (std::size_t k = 0; k < ps.size(); ++k) {
        c.packets.push_back(parse_packet(ps[k], "initial.packets[" + std::to_string(k) + "]", c.units));
      }
    } else if (kind == "file") {
      allow_keys(i, "initial", {"kind", "path"});
      c.initial = InitialKind::file;
      c.initial_file = resolve(base, text(i, "initial", "path"));
    } else if (kind == "fundamental_mode") {
      allow_keys(i, "initial", {"kind"});
      if (c.mode != Mode::optics) config_error("initial.kind", "fundamental_mode needs mode \"optics\"");
      c.initial = InitialKind::fundamental_mode;
    } else {
      config_error("initial.kind", "expected packets, file or fundamental_mode");
    }
  }

  {
    const json& p = require_object(require(doc, "", "propagation"), "propagation");
    const bool optics = c.mode == Mode::optics;
    const char* step = optics ? "dz" : "dt";
    const char* final = optics ? "z_final" : "t_final";
    allow_keys(p, "propagation", {step, final, "record_every", "absorber", "boundary_tolerance"});
    c.controls.dt = positive(p, "propagation", step);
    c.controls.t_final = positive(p, "propagation", final);
    c.controls.record_every = count(p, "propagation", "record_every", 1);
    if (c.controls.record_every == 0) config_error("propagation.record_every", "must be at least 1");
    c.controls.boundary_tolerance = positive(p, "propagation", "boundary_tolerance", c.controls.boundary_tolerance);
    if (const json* a = find(p, "absorber")) {
      require_object(*a, "propagation.absorber");
      allow_keys(*a, "propagation.absorber", {"width", "strength"});
      AbsorberSpec spec;
      spec.width = positive(*a, "propagation.absorber", "width");
      spec.strength = positive(*a, "propagation.absorber", "strength");
      if (spec.width >= 0.5 * (c.grid.max - c.grid.min)) {
        config_error("propagation.absorber.width", "absorbing layers would cover the whole grid");
      }
      c.controls.absorber = spec;
    }
  }

  if (const json* a = find(doc, "analyses")) c.analyses = parse_analyses(*a, "analyses");
  const auto& an = c.analyses;
  const bool barrier = c.mode == Mode::quantum && c.potential.kind() == Potential::Kind::barrier;
  if (an.tubes && c.controls.absorber) {
    config_error("analyses.tubes",
                 "tube analysis needs a unitary run (probability must be conserved); remove propagation.absorber");
  }
  if ((an.regions || an.separatrix) && !barrier) {
    config_error(an.regions ? "analyses.regions" : "analyses.separatrix", "needs a barrier potential");
  }
  if (an.contrast_per_packet > 0) {
    if (c.mode != Mode::quantum || c.initial != InitialKind::packets ||
        c.potential.kind() != Potential::Kind::free) {
      config_error("analyses.contrast", "single-packet contrast paths need free-space packets");
    }
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, path.string() + ": cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": invalid JSON: " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

namespace {

Grid make_grid(const ScenarioConfig& c) { return Grid::line(c.grid); }

std::optional<ParaxialProblem> make_problem(const ScenarioConfig& c, const Grid& grid) {
  if (!c.optics) return std::nullopt;
  try {
    return reduce_to_paraxial(c.optics->profile, c.optics->wavelength, grid, c.controls.t_final);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParaxialViolation || e.kind() == ErrorKind::InvalidArgument) {
      config_error("optics.profile", e.what());
    }
    throw;
  }
}

WaveField make_initial(const ScenarioConfig& c, const Grid& grid, const std::optional<ParaxialProblem>& problem) {
  switch (c.initial) {
    case InitialKind::packets: {
      try {
        WaveField f = superposition_field(c.packets, grid, 0.0);
        return WaveField(grid, {f.values().begin(), f.values().end()}, 0.0, c.mode, c.units);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::GridTooNarrow) config_error("grid", e.what());
        throw;
      }
    }
    case InitialKind::file: {
      std::ifstream in(c.initial_file);
      if (!in) config_error("initial.path", "cannot open " + c.initial_file.string());
      WaveField f = [&] {
        try {
          return read_field_csv(in, c.mode, c.units);
        } catch (const Error& e) {
          config_error("initial.path", e.what());
        }
      }();
      if (!(f.grid().x() == grid.x())) {
        config_error("initial.path", "field grid does not match the grid block (x_min, x_max, n)");
      }
      return f.normalized();
    }
    case InitialKind::fundamental_mode: {
      RelaxationOptions ro;
      ro.dtau = c.controls.dt;
      return fundamental_mode(grid, *problem, 0.0, ro, c.controls.dt);
    }
  }
  throw Error(ErrorKind::Config, "initial: unsupported kind");
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

ValidationReport validate_scenario(const ScenarioConfig& c) {
  ValidationReport r;
  const Grid grid = make_grid(c);
  const auto problem = make_problem(c, grid);
  if (problem) {
    r.notes.push_back("paraxial: k_z = " + fmt(problem->k_z) + " per micrometer");
  }
  if (c.initial == InitialKind::packets) {
    const WaveField f = make_initial(c, grid, problem);
    r.notes.push_back("initial edge amplitude ratio " + fmt(edge_amplitude_ratio(f)));
    if (c.potential.kind() == Potential::Kind::free && c.mode == Mode::quantum) {
      for (std::size_t k = 0; k < c.packets.size(); ++k) {
        const auto& p = c.packets[k];
        const double t = c.controls.t_final;
        const double reach = 8.0 * sigma_t(p, t);
        const double xc = p.classical_position(t);
        if (xc - reach < c.grid.min || xc + reach > c.grid.max) {
          config_error("initial.packets[" + std::to_string(k) + "]",
                       "free evolution carries the packet within 8 widths of the grid edge by t_final; widen the grid");
        }
      }
    }
  } else if (c.initial == InitialKind::file) {
    (void)make_initial(c, grid, problem);
  }
  const double steps = std::ceil(c.controls.t_final / c.controls.dt);
  const double snapshots = std::floor(steps / static_cast<double>(c.controls.record_every)) + 1.0;
  const double n = static_cast<double>(grid.size());
  // Snapshot payload plus the guidance tables (rho, v) built for trajectory work.
  r.estimated_bytes = static_cast<std::size_t>(snapshots * n * (16.0 + 16.0));
  const double traj = c.analyses.ensemble ? static_cast<double>(c.analyses.ensemble->n_traj) : 0.0;
  r.estimated_seconds = steps * n * std::log2(n) * 4e-9 + traj * snapshots * 8.0 * 4.0 * 5e-8;
  return r;
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("BOHMFLOW_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

namespace {

struct Checklist {
  std::vector<CheckResult> checks;
  std::vector<std::string> notes;

  void add(std::string name, double measured, double limit, bool pass, std::string detail = {}) {
    checks.push_back({std::move(name), measured, limit, pass, std::move(detail)});
  }
  void below(std::string name, double measured, double limit, std::string detail = {}) {
    add(std::move(name), measured, limit, std::isfinite(measured) && measured < limit, std::move(detail));
  }
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
};

void write_report(const std::filesystem::path& path, const ScenarioConfig& c, const Checklist& list,
                  const std::string& failure) {
  std::ofstream out(path);
  out << "bohmflow " << BOHMFLOW_VERSION << " scenario " << c.name << " ("
      << (c.mode == Mode::optics ? "optics" : "quantum") << ")\n\n";
  out << "invariant checks\n";
  for (const auto& ch : list.checks) {
    out << (ch.pass ? "  PASS  " : "  FAIL  ") << ch.name << "  measured=" << fmt(ch.measured)
        << "  limit=" << fmt(ch.limit);
    if (!ch.detail.empty()) out << "  (" << ch.detail << ")";
    out << '\n';
  }
  if (!list.notes.empty()) {
    out << "\nmeasurements\n";
    for (const auto& n : list.notes) out << "  " << n << '\n';
  }
  if (!failure.empty()) out << "\nrun aborted: " << failure << '\n';
  out << "\nresult: " << (failure.empty() && list.all_pass() ? "PASS" : "FAIL") << '\n';
}

void write_manifest(const std::filesystem::path& dir, const ScenarioConfig& c, std::uint64_t seed, int exit_code) {
  json m;
  m["tool"] = "bohmflow";
  m["version"] = BOHMFLOW_VERSION;
  m["scenario"] = c.name;
  m["seed"] = seed;
  m["exit_code"] = exit_code;
  m["config"] = c.source;
  auto& files = m["files"] = json::object();
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
  }
  // Snapshot manifests sit in snapshots/ and are listed like any other file.
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory()) {
      const auto inner = e.path() / "manifest.json";
      if (std::filesystem::exists(inner)) paths.push_back(inner);
    }
  }
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  for (const auto& p : paths) files[std::filesystem::relative(p, dir).generic_string()] = file_checksum(p);
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

int side_changes(std::span<const Trajectory> ts, double axis) {
  int n = 0;
  for (const auto& t : ts) {
    if (t.samples.empty()) continue;
    if ((t.front().position[0] < axis) != (t.back().position[0] < axis)) ++n;
  }
  return n;
}

std::vector<Trajectory> contrast_paths(const ScenarioConfig& c, const PropagationRecord& record, unsigned threads,
                                       std::uint64_t seed) {
  std::vector<Trajectory> out;
  const auto params = record.params();
  for (std::size_t k = 0; k < c.packets.size(); ++k) {
    GaussianSpec single = c.packets[k];
    single.weight = {1.0, 0.0};
    const AnalyticGuidance guide({single}, record.grid(), params);
    EnsembleSpec spec;
    spec.n_traj = c.analyses.contrast_per_packet;
    spec.sampling = Sampling::rho_weighted;
    spec.seed = seed + 1000 + k;
    auto ts = integrate_ensemble(guide, spec, Direction::forward, threads);
    const std::string prefix = "contrast-" + std::to_string(k) + "-";
    for (auto& t : ts) t.label = prefix + t.label.substr(t.label.find('-') + 1);
    std::move(ts.begin(), ts.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& c, const RunOptions& options) {
  RunResult result;
  const std::uint64_t seed = options.seed.value_or(c.seed);
  const unsigned threads = std::max(1u, options.threads);
  const std::filesystem::path dir = !options.out.empty() ? options.out
                                    : c.output              ? *c.output
                                                            : default_output_root() / c.name;
  result.directory = dir;
  std::filesystem::create_directories(dir);
  std::filesystem::remove_all(dir / "snapshots");

  Checklist list;
  std::string failure;
  try {
    const Grid grid = make_grid(c);
    const auto problem = make_problem(c, grid);
    const WaveField initial = make_initial(c, grid, problem);
    const PropagationRecord record =
        problem ? propagate_z(initial, *problem, c.controls) : propagate(initial, c.potential, c.controls);
    save_record(dir / "snapshots", record);
    const auto params = record.params();
    const char* pname = c.mode == Mode::optics ? "z" : "t";

    if (record.absorbing) {
      list.notes.push_back("absorbed fraction " + fmt(norm(record.snapshots.front()) - norm(record.snapshots.back())));
    } else {
      list.below("norm_drift", record.norm_drift, c.controls.norm_tolerance);
    }

    // Columns of probabilities.csv, one value per snapshot.
    std::vector<std::pair<std::string, std::vector<double>>> columns;
    {
      std::vector<double> n;
      for (const auto& s : record.snapshots) n.push_back(norm(s));
      columns.emplace_back("norm", std::move(n));
    }

    std::vector<Trajectory> written;
    std::optional<RecordGuidance> guidance;
    auto guide = [&]() -> const RecordGuidance& {
      if (!guidance) guidance.emplace(record);
      return *guidance;
    };

    std::vector<Trajectory> ensemble;
    if (c.analyses.ensemble) {
      EnsembleSpec spec = *c.analyses.ensemble;
      spec.seed = seed;
      ensemble = integrate_ensemble(guide(), spec, Direction::forward, threads);
      std::size_t halted = 0, left = 0;
      double displacement = 0.0;
      for (const auto& t : ensemble) {
        halted += t.status == TrajectoryStatus::halted_at_node;
        left += t.status == TrajectoryStatus::left_grid;
        for (const auto& s : t.samples) {
          displacement = std::max(displacement, std::abs(s.position[0] - t.front().position[0]));
        }
      }
      list.notes.push_back("ensemble: " + std::to_string(ensemble.size()) + " trajectories, " + std::to_string(halted) +
                           " halted at nodes, " + std::to_string(left) + " left the grid, max displacement " +
                           fmt(displacement));
    }
    if (c.analyses.non_crossing) {
      const auto report = check_non_crossing(ensemble, grid.x().width());
      std::string detail = std::to_string(report.comparisons) + " ordered pairs compared";
      if (report.first) {
        detail += "; first violation " + report.first->lower_label + "/" + report.first->upper_label + " at " + pname +
                  "=" + fmt(report.first->param);
      }
      list.add("non_crossing_violations", static_cast<double>(report.violations), 0.0, report.ok(), detail);
    }
    if (c.analyses.statistics) {
      const double limit = 3.0 / std::sqrt(static_cast<double>(ensemble.size()));
      const std::size_t last = params.size() - 1;
      for (std::size_t k : {std::size_t{0}, last / 2, last}) {
        const auto xs = positions_at(ensemble, params[k]);
        const auto rho = guide().density_snapshot(k);
        list.below(std::string("ks_distance@") + pname + "=" + fmt(params[k]), ks_distance(xs, grid, rho), limit);
      }
    }
    if (c.analyses.contrast_per_packet > 0) {
      double axis = 0.0;
      for (const auto& p : c.packets) axis += p.x0;
      axis /= static_cast<double>(c.packets.size());
      const auto contrast = contrast_paths(c, record, threads, seed);
      list.notes.push_back("symmetry axis x=" + fmt(axis) + ": superposition paths changing side " +
                           std::to_string(side_changes(ensemble, axis)) + ", single-packet contrast paths changing side " +
                           std::to_string(side_changes(contrast, axis)) + " of " + std::to_string(contrast.size()));
      std::move(ensemble.begin(), ensemble.end(), std::back_inserter(written));
      std::move(contrast.begin(), contrast.end(), std::back_inserter(written));
    } else {
      std::move(ensemble.begin(), ensemble.end(), std::back_inserter(written));
    }

    if (c.analyses.regions) {
      const auto parts = barrier_partition(c.potential.barrier_spec());
      std::vector<std::vector<double>> series(3);
      double worst = 0.0;
      for (const auto& s : record.snapshots) {
        double sum = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
          const double p = restricted_probability(s, parts[r]);
          series[r].push_back(p);
          sum += p;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
      }
      list.below("partition_sum_deviation", worst, 1e-6);
      for (std::size_t r = 0; r < 3; ++r) {
        const auto fb = flux_balance(record, parts[r]);
        const double scale = std::max(fb.max_boundary_current, 1e-300);
        list.below("flux_balance[" + parts[r].label + "]", fb.max_residual / scale, 1e-3,
                   "max residual " + fmt(fb.max_residual) + " over max boundary current " + fmt(fb.max_boundary_current));
        columns.emplace_back(parts[r].label, series[r]);
      }
      if (c.analyses.ensemble && c.analyses.ensemble->sampling == Sampling::rho_weighted) {
        const auto& trans = parts[2];
        const double p = series[2].back();
        const double counted = counting_probability(written, trans, params.back());
        const double n = static_cast<double>(c.analyses.ensemble->n_traj);
        list.below("counting_vs_quadrature[transmitted]", std::abs(counted - p), 3.0 * std::sqrt(p * (1.0 - p) / n) + 0.5 / n);
      }
    }

    if (c.analyses.separatrix) {
      const auto barrier = c.potential.barrier_spec();
      const double target = separatrix_target(record.snapshots.back(), barrier);
      const SeparatrixResult sep = find_separatrix(guide(), target);
      const double width = grid.x().width();
      list.below("separatrix_agreement", sep.disagreement / width, 1e-3,
                 "backward x0=" + fmt(sep.initial_backward) + ", bisection x0=" + fmt(sep.initial_bisection));
      constexpr double kEps = 1e-3;
      const auto below = integrate_trajectory(guide(), {sep.initial_backward - kEps, 0.0}, Direction::forward, "sep-minus");
      const auto above = integrate_trajectory(guide(), {sep.initial_backward + kEps, 0.0}, Direction::forward, "sep-plus");
      const double xb = below.back().position[0], xa = above.back().position[0];
      const bool split = xb < barrier.left_edge() && xa > barrier.right_edge();
      list.add("separatrix_split", xa - xb, 0.0, split,
               "x0-eps ends at " + fmt(xb) + ", x0+eps ends at " + fmt(xa));
      Trajectory path = sep.trajectory;
      path.label = "separatrix";
      std::reverse(path.samples.begin(), path.samples.end());

      if (c.analyses.tubes) {
        const TubeResult tube = verify_tube(record, path, Side::right);
        list.below("tube_constancy", tube.constancy_error, 1e-3);
        const auto parts = barrier_partition(barrier);
        const double p_trans = restricted_probability(record.snapshots.back(), parts[2]);
        list.below("tube_vs_asymptotic_transmission", std::abs(tube.initial - p_trans), 1e-3,
                   "P0=" + fmt(tube.initial) + ", P_trans(final)=" + fmt(p_trans));
        std::ofstream(dir / "tubes.json") << [&] {
          std::ostringstream s;
          write_tube_json(s, tube, path.label);
          return s.str();
        }();
        if (tube.probability.size() == params.size()) columns.emplace_back("tube", tube.probability);
      }
      written.push_back(std::move(path));
    }

    if (c.analyses.arm_split) {
      std::vector<double> l, r;
      for (const auto& s : record.snapshots) {
        const auto a = arm_power_split(s, c.analyses.arm_axis);
        l.push_back(a.left);
        r.push_back(a.right);
      }
      const auto fin = arm_power_split(record.snapshots.back(), c.analyses.arm_axis);
      list.notes.push_back("final arm powers left=" + fmt(fin.left) + " right=" + fmt(fin.right) +
                           " fractions " + fmt(fin.left_fraction()) + "/" + fmt(fin.right_fraction()));
      if (c.analyses.expected_left_fraction) {
        list.below("arm_split_deviation", std::abs(fin.left_fraction() - *c.analyses.expected_left_fraction),
                   c.analyses.arm_tolerance);
      }
      if (!ensemble.empty() || !written.empty()) {
        list.notes.push_back("streamlines changing side of the axis: " +
                             std::to_string(side_changes(written, c.analyses.arm_axis)));
      }
      columns.emplace_back("left", std::move(l));
      columns.emplace_back("right", std::move(r));
    }

    {
      std::ofstream out(dir / "trajectories.csv");
      write_trajectories_csv(out, written);
    }
    {
      std::ofstream out(dir / "probabilities.csv");
      out << pname;
      for (const auto& col : columns) out << ',' << col.first;
      out << '\n';
      for (std::size_t k = 0; k < params.size(); ++k) {
        out << fmt(params[k]);
        for (const auto& col : columns) out << ',' << fmt(col.second[k]);
        out << '\n';
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Io) {
      result.exit_code = kExitConfig;
    } else {
      result.exit_code = kExitNumeric;
    }
    failure = e.what();
  }

  if (result.exit_code == kExitOk && !list.all_pass()) result.exit_code = kExitNumeric;
  write_report(dir / "report.txt", c, list, failure);
  write_manifest(dir, c, seed, result.exit_code);
  result.checks = std::move(list.checks);
  result.notes = std::move(list.notes);
  if (!failure.empty()) result.notes.push_back(failure);
  return result;
}

}  // namespace bohmflow
