#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bohmflow/analytic_packets.hpp"
#include "bohmflow/errors.hpp"
#include "bohmflow/hydro.hpp"
#include "bohmflow/paraxial.hpp"
#include "bohmflow/propagator.hpp"
#include "bohmflow/scenario.hpp"
#include "bohmflow/trajectory.hpp"
#include "bohmflow/tubes.hpp"

namespace py = pybind11;
using namespace bohmflow;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<cplx> values_of(const WaveField& f) {
  py::array_t<cplx> out(static_cast<py::ssize_t>(f.values().size()));
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

WaveField field_from(const Grid& grid, py::array_t<cplx, py::array::c_style | py::array::forcecast> psi, double param,
                     Mode mode, Units units) {
  const auto* p = psi.data();
  return WaveField(grid, std::vector<cplx>(p, p + psi.size()), param, mode, units);
}

py::dict trajectory_dict(const Trajectory& t) {
  std::vector<double> param, x, v;
  for (const auto& s : t.samples) {
    param.push_back(s.param);
    x.push_back(s.position[0]);
    v.push_back(s.velocity[0]);
  }
  py::dict d;
  d["label"] = t.label;
  d["param"] = to_array(param);
  d["x"] = to_array(x);
  d["v"] = to_array(v);
  d["status"] = std::string(to_string(t.status));
  return d;
}

std::vector<Trajectory> trajectories_from(const py::list& items) {
  // Accepts dicts as produced by trajectory_dict.
  std::vector<Trajectory> out;
  for (const auto& item : items) {
    const auto d = item.cast<py::dict>();
    Trajectory t;
    t.label = d["label"].cast<std::string>();
    const auto param = d["param"].cast<std::vector<double>>();
    const auto x = d["x"].cast<std::vector<double>>();
    if (param.size() != x.size()) throw Error(ErrorKind::InvalidArgument, "param and x lengths differ");
    for (std::size_t k = 0; k < x.size(); ++k) t.samples.push_back({param[k], {x[k], 0.0}, {0.0, 0.0}});
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_bohmflow, m) {
  m.doc() = "Bohmian trajectories, probability tubes and paraxial optical streamlines";
  m.attr("__version__") = BOHMFLOW_VERSION;

  static py::exception<Error> error(m, "BohmflowError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::enum_<Mode>(m, "Mode").value("quantum", Mode::quantum).value("optics", Mode::optics);

  py::class_<Units>(m, "Units")
      .def(py::init([](double hbar, double mass) { return Units{hbar, mass}; }), py::arg("hbar") = 1.0,
           py::arg("mass") = 1.0)
      .def_readwrite("hbar", &Units::hbar)
      .def_readwrite("mass", &Units::mass);

  py::class_<Grid>(m, "Grid")
      .def(py::init([](double x_min, double x_max, std::size_t n) { return Grid::line(x_min, x_max, n); }),
           py::arg("x_min"), py::arg("x_max"), py::arg("n"))
      .def_property_readonly("n", [](const Grid& g) { return g.x().n; })
      .def_property_readonly("dx", [](const Grid& g) { return g.x().spacing(); })
      .def_property_readonly("x", [](const Grid& g) { return to_array(g.x_coords()); });

  py::class_<GaussianSpec>(m, "GaussianSpec")
      .def(py::init([](double x0, double p0, double sigma0, double mass, double hbar, cplx weight) {
             GaussianSpec g{.x0 = x0, .p0 = p0, .sigma0 = sigma0, .mass = mass, .hbar = hbar, .weight = weight};
             g.validate();
             return g;
           }),
           py::arg("x0"), py::arg("p0") = 0.0, py::arg("sigma0") = 1.0, py::arg("mass") = 1.0, py::arg("hbar") = 1.0,
           py::arg("weight") = cplx(1.0, 0.0))
      .def_readwrite("x0", &GaussianSpec::x0)
      .def_readwrite("p0", &GaussianSpec::p0)
      .def_readwrite("sigma0", &GaussianSpec::sigma0)
      .def_readwrite("mass", &GaussianSpec::mass)
      .def_readwrite("hbar", &GaussianSpec::hbar)
      .def_readwrite("weight", &GaussianSpec::weight)
      .def("characteristic_time", &GaussianSpec::characteristic_time);

  m.def("sigma_t", &sigma_t, py::arg("spec"), py::arg("t"));
  m.def("analytic_trajectory", &analytic_bohmian_trajectory, py::arg("spec"), py::arg("x_init"), py::arg("t"));
  m.def("packet_velocity", &packet_velocity, py::arg("spec"), py::arg("x"), py::arg("t"));
  m.def(
      "superposition", [](const std::vector<GaussianSpec>& specs, const Grid& grid, double t) {
        return values_of(superposition_field(specs, grid, t));
      },
      py::arg("specs"), py::arg("grid"), py::arg("t"), "Normalized superposition sampled on the grid.");
  m.def(
      "classify_regime",
      [](const GaussianSpec& spec, double t) {
        const auto r = classify_regime(spec, t);
        return py::make_tuple(std::string(to_string(r.regime)), r.ratio);
      },
      py::arg("spec"), py::arg("t"));

  m.def(
      "decompose",
      [](const Grid& grid, py::array_t<cplx, py::array::c_style | py::array::forcecast> psi, double hbar, double mass) {
        const auto h = decompose(field_from(grid, psi, 0.0, Mode::quantum, Units{hbar, mass}));
        py::dict d;
        d["rho"] = to_array(h.rho);
        d["action"] = to_array(h.action);
        d["current"] = to_array(h.current_x);
        d["velocity"] = to_array(h.velocity_x);
        d["quantum_potential"] = to_array(h.quantum_potential);
        d["defined"] = to_array(h.defined);
        d["node_threshold"] = h.node_threshold;
        return d;
      },
      py::arg("grid"), py::arg("psi"), py::arg("hbar") = 1.0, py::arg("mass") = 1.0);

  py::class_<PropagationRecord>(m, "Record")
      .def_property_readonly("params", [](const PropagationRecord& r) { return to_array(r.params()); })
      .def_readonly("norm_drift", &PropagationRecord::norm_drift)
      .def_readonly("dt", &PropagationRecord::dt)
      .def_readonly("absorbing", &PropagationRecord::absorbing)
      .def("__len__", [](const PropagationRecord& r) { return r.snapshots.size(); })
      .def(
          "psi", [](const PropagationRecord& r, std::size_t k) { return values_of(r.snapshots.at(k)); }, py::arg("k"))
      .def(
          "save", [](const PropagationRecord& r, const std::filesystem::path& dir) { save_record(dir, r); },
          py::arg("directory"));
  m.def("load_record", &load_record, py::arg("directory"));

  m.def(
      "propagate",
      [](const Grid& grid, py::array_t<cplx, py::array::c_style | py::array::forcecast> psi,
         std::vector<double> potential, double dt, double t_final, std::size_t record_every, double hbar,
         double mass) {
        PropagationControls c;
        c.dt = dt;
        c.t_final = t_final;
        c.record_every = record_every;
        const auto initial = field_from(grid, psi, 0.0, Mode::quantum, Units{hbar, mass});
        py::gil_scoped_release release;
        return propagate(initial, potential.empty() ? Potential::free() : Potential::sampled(std::move(potential)), c);
      },
      py::arg("grid"), py::arg("psi"), py::arg("potential") = std::vector<double>{}, py::arg("dt"),
      py::arg("t_final"), py::arg("record_every") = 1, py::arg("hbar") = 1.0, py::arg("mass") = 1.0,
      "Split-operator propagation; an empty potential means free evolution.");

  m.def(
      "barrier_potential",
      [](const Grid& grid, double center, double width, double height, double edge_smoothness) {
        return to_array(Potential::barrier({center, width, height, edge_smoothness}).sample(grid));
      },
      py::arg("grid"), py::arg("center"), py::arg("width"), py::arg("height"), py::arg("edge_smoothness") = 0.0);

  m.def(
      "trajectories",
      [](const PropagationRecord& record, std::vector<double> starts, unsigned threads) {
        EnsembleSpec spec;
        spec.sampling = Sampling::explicit_list;
        spec.positions = std::move(starts);
        spec.n_traj = spec.positions.size();
        std::vector<Trajectory> ts;
        {
          py::gil_scoped_release release;
          const RecordGuidance guide(record);
          ts = integrate_ensemble(guide, spec, Direction::forward, threads);
        }
        py::list out;
        for (const auto& t : ts) out.append(trajectory_dict(t));
        return out;
      },
      py::arg("record"), py::arg("starts"), py::arg("threads") = 1,
      "Integrates one trajectory per start position; results sorted by start.");

  m.def(
      "non_crossing_violations",
      [](const py::list& trajectories, double domain_width) {
        const auto ts = trajectories_from(trajectories);
        return check_non_crossing(ts, domain_width).violations;
      },
      py::arg("trajectories"), py::arg("domain_width"));

  m.def(
      "interval_probability",
      [](const Grid& grid, py::array_t<cplx, py::array::c_style | py::array::forcecast> psi, double lo, double hi) {
        return interval_probability(field_from(grid, psi, 0.0, Mode::quantum, {}), lo, hi);
      },
      py::arg("grid"), py::arg("psi"), py::arg("lo"), py::arg("hi"));

  m.def(
      "separatrix_tube",
      [](const PropagationRecord& record, double center, double width, double height, double edge_smoothness) {
        const BarrierSpec barrier{center, width, height, edge_smoothness};
        py::dict d;
        SeparatrixResult sep{};
        TubeResult tube;
        {
          py::gil_scoped_release release;
          const RecordGuidance guide(record);
          sep = find_separatrix(guide, separatrix_target(record.snapshots.back(), barrier));
          tube = verify_tube(record, sep.trajectory, Side::right);
        }
        d["initial_backward"] = sep.initial_backward;
        d["initial_bisection"] = sep.initial_bisection;
        d["P0"] = tube.initial;
        d["P_inf"] = tube.asymptotic;
        d["constancy_error"] = tube.constancy_error;
        d["P_series"] = to_array(tube.probability);
        return d;
      },
      py::arg("record"), py::arg("center"), py::arg("width"), py::arg("height"), py::arg("edge_smoothness") = 0.0,
      "Transmitted-side separatrix and tube probability for a barrier run.");

  m.def(
      "paraxial_mode_run",
      [](const std::string& geometry, const Grid& grid, double wavelength, double dz, double z_final,
         std::size_t record_every, double split_z) {
        IndexProfile profile;
        if (geometry == "straight") profile.geometry = IndexProfile::Geometry::straight;
        else if (geometry == "y_junction") profile.geometry = IndexProfile::Geometry::y_junction;
        else throw Error(ErrorKind::InvalidArgument, "geometry must be straight or y_junction");
        profile.split_z = split_z;
        PropagationControls c;
        c.dt = dz;
        c.t_final = z_final;
        c.record_every = record_every;
        if (profile.geometry == IndexProfile::Geometry::y_junction) c.absorber = AbsorberSpec{0.125 * grid.x().width(), 0.1};
        py::gil_scoped_release release;
        const auto problem = reduce_to_paraxial(profile, wavelength, grid, z_final);
        RelaxationOptions ro;
        ro.dtau = dz;
        return propagate_z(fundamental_mode(grid, problem, 0.0, ro, dz), problem, c);
      },
      py::arg("geometry"), py::arg("grid"), py::arg("wavelength") = 1.55, py::arg("dz") = 0.1,
      py::arg("z_final") = 1000.0, py::arg("record_every") = 20, py::arg("split_z") = 100.0,
      "Propagates the input-guide mode through a straight guide or symmetric Y-junction (micrometers).");

  m.def(
      "arm_split",
      [](const PropagationRecord& record, double axis) {
        const auto s = arm_power_split(record.snapshots.back(), axis);
        return py::make_tuple(s.left, s.right);
      },
      py::arg("record"), py::arg("axis") = 0.0);

  m.def(
      "validate_scenario",
      [](const std::filesystem::path& path) {
        const auto report = validate_scenario(load_scenario(path));
        return report.notes;
      },
      py::arg("path"));

  m.def(
      "run_scenario",
      [](const std::filesystem::path& path, const std::filesystem::path& out, unsigned threads) {
        const auto config = load_scenario(path);
        RunOptions options;
        options.out = out;
        options.threads = threads;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(config, options);
        }
        py::dict checks;
        for (const auto& c : r.checks) checks[py::str(c.name)] = py::make_tuple(c.pass, c.measured, c.limit);
        return py::make_tuple(r.exit_code, checks);
      },
      py::arg("path"), py::arg("out"), py::arg("threads") = 1);
}
