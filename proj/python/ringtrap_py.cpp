#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ringtrap/error.hpp"
#include "ringtrap/observables.hpp"
#include "ringtrap/propagator.hpp"
#include "ringtrap/radial.hpp"

namespace py = pybind11;
using namespace ringtrap;

namespace {

py::array_t<Complex> field_to_array(const GridState& s) {
  py::array_t<Complex> a({s.spec.N, s.spec.N});
  std::copy(s.amplitudes.begin(), s.amplitudes.end(), a.mutable_data());
  return a;
}

GridState array_to_state(const GridSpec& spec, py::array_t<Complex, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2 || a.shape(0) != spec.N || a.shape(1) != spec.N) {
    throw ConfigError("amplitude array must have shape (N, N)");
  }
  GridState s;
  s.spec = spec;
  s.amplitudes.assign(a.data(), a.data() + a.size());
  return s;
}

py::dict records_to_dict(const std::vector<ObservableRecord>& recs) {
  const std::pair<const char*, double ObservableRecord::*> cols[] = {
      {"tau", &ObservableRecord::tau}, {"nu", &ObservableRecord::nu},     {"norm", &ObservableRecord::norm},
      {"energy", &ObservableRecord::energy}, {"lz", &ObservableRecord::lz}, {"vx", &ObservableRecord::vx},
      {"vy", &ObservableRecord::vy},   {"autocorr", &ObservableRecord::autocorr}, {"cx", &ObservableRecord::cx},
      {"cy", &ObservableRecord::cy}};
  py::dict d;
  for (const auto& [name, member] : cols) {
    py::array_t<double> a(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) a.mutable_at(i) = recs[i].*member;
    d[name] = a;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two charges in a 2D harmonic trap with a perpendicular magnetic field (relative motion).";
  m.attr("__version__") = RINGTRAP_VERSION;

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
  static py::exception<IoError> io(m, "IoError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config(e.what());
    } catch (const NumericalError& e) {
      numerical(e.what());
    } catch (const IoError& e) {
      io(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  py::class_<TrapParams>(m, "TrapParams")
      .def(py::init(&TrapParams::make), py::arg("nu"), py::arg("b"))
      .def_readonly("nu", &TrapParams::nu)
      .def_readonly("b", &TrapParams::b)
      .def_readonly("field_sign", &TrapParams::field_sign)
      .def_property_readonly("gauss_width", &TrapParams::gauss_width)
      .def("__repr__", [](const TrapParams& t) {
        return "TrapParams(nu=" + std::to_string(t.field_sign * t.nu) + ", b=" + std::to_string(t.b) + ")";
      });

  m.def("effective_potential", py::vectorize([](double nu, double b, int mm, double rho) {
          return effective_potential(TrapParams::make(nu, b), mm, rho);
        }),
        py::arg("nu"), py::arg("b"), py::arg("m"), py::arg("rho"),
        "Radial potential V(rho) of the reduced equation; broadcasts over arrays.");
  m.def("fock_darwin_energy",
        [](double nu, int mm, int n) { return fock_darwin_energy(TrapParams::make(nu, 0.0), {mm, n}); },
        py::arg("nu"), py::arg("m"), py::arg("n") = 0);

  py::class_<RadialEigenSolution>(m, "RadialEigenSolution")
      .def_readonly("m", &RadialEigenSolution::m)
      .def_readonly("energies", &RadialEigenSolution::energies)
      .def_readonly("coefficients", &RadialEigenSolution::coefficients)
      .def_property_readonly("ground_energy", &RadialEigenSolution::ground_energy);

  m.def("solve_sector",
        [](double nu, double b, int mm, int K) {
          py::gil_scoped_release release;
          return solve_sector(TrapParams::make(nu, b), mm, K);
        },
        py::arg("nu"), py::arg("b"), py::arg("m"), py::arg("K") = kDefaultBasisSize);

  m.def("ground_state_scan",
        [](double nu, double b, int lo, int hi, int K) {
          GroundStateRecord r;
          {
            py::gil_scoped_release release;
            r = ground_state_scan(TrapParams::make(nu, b), MRange{lo, hi}, K);
          }
          py::dict d;
          d["m_star"] = r.m_star;
          d["energy"] = r.energy;
          d["sector_energies"] = r.sector_energies;
          return d;
        },
        py::arg("nu"), py::arg("b"), py::arg("m_lo") = -3, py::arg("m_hi") = 6, py::arg("K") = kDefaultBasisSize);

  m.def("find_ground_crossings",
        [](double b, double lo, double hi, double step) {
          std::vector<CrossingRecord> cs;
          {
            py::gil_scoped_release release;
            cs = find_ground_crossings(b, lo, hi, step);
          }
          py::list out;
          for (const auto& c : cs) {
            out.append(py::dict(py::arg("m1") = c.m1, py::arg("m2") = c.m2, py::arg("nu_star") = c.nu_star,
                                py::arg("energy") = c.energy));
          }
          return out;
        },
        py::arg("b"), py::arg("nu_lo"), py::arg("nu_hi"), py::arg("step") = 0.05);

  m.def("current_density",
        [](double nu, double b, int mm, const std::vector<double>& rho) {
          const TrapParams tp = TrapParams::make(nu, b);
          const auto wf = RadialWavefunction::from_solution(solve_sector(tp, mm));
          return py::array_t<double>(rho.size(), current_density(wf, tp, rho).j_phi.data());
        },
        py::arg("nu"), py::arg("b"), py::arg("m"), py::arg("rho"),
        "Azimuthal current J(rho) of the lowest state in sector m.");

  m.def("velocity_expectation",
        [](double nu, double b, int mm) { return sector_velocity(TrapParams::make(nu, b), mm); }, py::arg("nu"),
        py::arg("b"), py::arg("m"));

  m.def("ground_velocity_sweep",
        [](double b, const std::vector<double>& nus) {
          std::vector<VelocitySweepRow> rows;
          {
            py::gil_scoped_release release;
            rows = ground_velocity_sweep(b, nus);
          }
          py::array_t<double> nu(rows.size()), e(rows.size()), v(rows.size());
          py::array_t<int> ms(rows.size());
          for (std::size_t i = 0; i < rows.size(); ++i) {
            nu.mutable_at(i) = rows[i].nu;
            ms.mutable_at(i) = rows[i].m_star;
            e.mutable_at(i) = rows[i].energy;
            v.mutable_at(i) = rows[i].velocity;
          }
          return py::dict(py::arg("nu") = nu, py::arg("m_star") = ms, py::arg("energy") = e, py::arg("velocity") = v);
        },
        py::arg("b"), py::arg("nu_grid"));

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init(&GridSpec::make), py::arg("N") = 256, py::arg("L") = 8.0, py::arg("offset") = true)
      .def_readonly("N", &GridSpec::N)
      .def_readonly("L", &GridSpec::L)
      .def_property_readonly("spacing", &GridSpec::spacing)
      .def_property_readonly("coordinates", [](const GridSpec& g) {
        py::array_t<double> x(g.N);
        for (int i = 0; i < g.N; ++i) x.mutable_at(i) = g.coordinate(i);
        return x;
      });

  m.def("gaussian_packet",
        [](const GridSpec& g, double xi0, double width) { return field_to_array(gaussian_packet(g, xi0, width)); },
        py::arg("grid"), py::arg("xi0") = 4.0, py::arg("width") = 0.5,
        "Normalized lab-frame packet exp(-a ((xi - xi0)^2 + eta^2)), indexed [i_xi, j_eta].");

  m.def("evolve",
        [](const GridSpec& g, py::array_t<Complex, py::array::c_style | py::array::forcecast> psi, double nu, double b,
           double dtau, double tau_end, int observe_every, const std::string& ramp, double tau_ramp) {
          const GridState start = array_to_state(g, psi);
          EvolveOptions o;
          o.dtau = dtau;
          o.tau_end = tau_end;
          o.observe_every = observe_every;
          TrapParams tp = TrapParams::make(nu, b);
          if (!ramp.empty()) {
            o.ramp = RampProtocol::make(ramp_from_string(ramp), tp.nu, tau_ramp);
            tp = TrapParams::make(0.0, b);
            tp.field_sign = nu < 0 ? -1 : 1;
          }
          EvolveResult r;
          {
            py::gil_scoped_release release;
            r = evolve(start, tp, o);
          }
          py::dict d = records_to_dict(r.records);
          d["final"] = field_to_array(to_lab(r.final_state));
          d["warnings"] = r.warnings;
          return d;
        },
        py::arg("grid"), py::arg("psi"), py::arg("nu"), py::arg("b"), py::arg("dtau") = 1e-3,
        py::arg("tau_end") = 1.0, py::arg("observe_every") = 10, py::arg("ramp") = "", py::arg("tau_ramp") = 0.0,
        "Real-time propagation; returns observable arrays and the final lab-frame amplitudes.");

  m.def("imaginary_time_ground",
        [](const GridSpec& g, double nu, double b, int mm) {
          ImagTimeResult r;
          {
            py::gil_scoped_release release;
            r = imaginary_time_ground(g, TrapParams::make(nu, b), mm);
          }
          return py::dict(py::arg("energy") = r.energy, py::arg("lz") = r.lz, py::arg("steps") = r.steps,
                          py::arg("state") = field_to_array(r.state));
        },
        py::arg("grid"), py::arg("nu"), py::arg("b"), py::arg("m"));

  m.def("circular_variance",
        [](const GridSpec& g, py::array_t<Complex, py::array::c_style | py::array::forcecast> psi) {
          return circular_variance(g, array_to_state(g, psi).amplitudes);
        },
        py::arg("grid"), py::arg("psi"));
}
