#include "declab/cli.hpp"
#include "declab/ppwave.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace declab;

namespace {

RunConfig make_config(const std::string& command, const std::map<std::string, std::string>& values,
                      const std::string& out_dir) {
  RunConfig cfg;
  cfg.command = command;
  cfg.out_dir = out_dir;
  cfg.values = values;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_declab, m) {
  m.doc() = "Constraint, mass and kernel checks for initial data sets";
  m.attr("__version__") = kVersion;
  m.attr("REPORT_SCHEMA") = kReportSchema;

  // Translators run newest first, so the derived type is registered last.
  auto& base = py::register_exception<Error>(m, "DeclabError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def("command_names", &command_names);
  m.def("command_keys", &command_keys, py::arg("command"));

  m.def(
      "parse_config",
      [](const std::string& text) {
        const RunConfig c = parse_config(text);
        return py::make_tuple(c.command, c.out_dir, c.values);
      },
      py::arg("text"), "Returns (command, out_dir, values).");

  // Runs a command and returns the report as JSON text. The GIL is released while it computes.
  m.def(
      "run_json",
      [](const std::string& command, const std::map<std::string, std::string>& values, const std::string& out_dir,
         const std::string& format) {
        std::string json;
        {
          py::gil_scoped_release release;
          const RunReport r = run_command(make_config(command, values, out_dir));
          if (!format.empty()) emit_report(r, out_dir, format);
          json = to_json(r);
        }
        return json;
      },
      py::arg("command"), py::arg("values") = std::map<std::string, std::string>{}, py::arg("out_dir") = "out",
      py::arg("format") = "");

  py::class_<PPWaveData>(m, "PPWave")
      .def(py::init([](int n, double amplitude, double radius, double halfwidth) {
             PPWaveSpec s;
             s.n = n;
             s.F.amplitude = amplitude;
             s.F.radius = radius;
             s.bump.halfwidth = halfwidth;
             return std::make_unique<PPWaveData>(s);
           }),
           py::arg("n") = 4, py::arg("amplitude") = 1.0, py::arg("radius") = 1.0, py::arg("halfwidth") = 1.0)
      .def_property_readonly("n", &PPWaveData::dim)
      .def_property_readonly("A", &PPWaveData::A)
      .def("S", [](const PPWaveData& p, const Vec& x) { return p.S(x).v; }, py::arg("x"))
      .def("metric", [](const PPWaveData& p, const Vec& x) { return p.data(x).g.v; }, py::arg("x"))
      .def(
          "constraints",
          [](const PPWaveData& p, const Vec& x) {
            const auto c = p.closed_constraints(x);
            if (!c) throw Error("no closed-form constraints");
            return py::make_tuple(c->first, Vec(c->second.v));
          },
          py::arg("x"), "Closed-form (mu, J) at x.")
      .def("energy_oracle", &PPWaveData::energy_oracle)
      .def("radial_flux", &PPWaveData::radial_flux);
}
