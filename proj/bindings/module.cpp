#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eqp/errors.hpp"
#include "eqp/experiment.hpp"
#include "eqp/ks.hpp"
#include "eqp/map_families.hpp"
#include "eqp/metric.hpp"
#include "eqp/positive_map.hpp"

namespace py = pybind11;

namespace {

eqp::HermitianMatrix hermitian(const eqp::CMatrix& m) { return eqp::HermitianMatrix(m); }

}  // namespace

PYBIND11_MODULE(_eqp, m) {
  m.doc() = "Ergodic quantum process simulation core";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<eqp::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<eqp::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<eqp::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<eqp::ResourceError>(m, "ResourceError", PyExc_RuntimeError);

  py::class_<eqp::PositiveMap>(m, "PositiveMap")
      .def_property_readonly("dim", &eqp::PositiveMap::dim)
      .def_property_readonly("label", &eqp::PositiveMap::label)
      .def("superop", &eqp::PositiveMap::superop)
      .def("apply", [](const eqp::PositiveMap& phi, const eqp::CMatrix& x) { return phi.apply(x); })
      .def("__repr__", [](const eqp::PositiveMap& phi) { return "<PositiveMap " + phi.label() + ">"; });

  m.def("parse_map", [](const std::string& spec) { return eqp::maps::parse(spec); }, py::arg("spec"),
        "Builds a map from an expression such as 'depolarizing(0.5)'.");
  m.def("compose", &eqp::compose, py::arg("phi"), py::arg("psi"));

  m.def(
      "dist",
      [](const eqp::CMatrix& a, const eqp::CMatrix& b) {
        const eqp::MetricValue v = eqp::dist(hermitian(a), hermitian(b));
        return py::make_tuple(v.d, v.m_ab, v.m_ba);
      },
      py::arg("a"), py::arg("b"), "Projective distance; returns (d, m(A,B), m(B,A)).");
  m.def(
      "contraction_coeff",
      [](const eqp::PositiveMap& phi) { return eqp::contraction_coeff(phi).lower; },
      py::arg("phi"));
  m.def(
      "perron",
      [](const eqp::PositiveMap& phi) {
        const eqp::PerronResult r = eqp::perron_right(phi);
        return py::make_tuple(r.lambda, r.eigenmatrix.matrix());
      },
      py::arg("phi"), "Perron eigenvalue and right eigenmatrix by power iteration.");
  m.def("spectral_radius", &eqp::superop_spectral_radius, py::arg("phi"));

  m.def(
      "ks_normality",
      [](const std::vector<double>& samples, double sigma) {
        const eqp::KsResult r = eqp::ks_normality(samples, sigma);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("samples"), py::arg("sigma"), "One-sample KS against N(0, sigma^2).");

  m.def(
      "normalize_config",
      [](const std::string& text) { return eqp::config_to_json(eqp::parse_config(text)).dump(); },
      py::arg("text"), "Validates a config and returns its canonical JSON.");
  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& out, int jobs) {
        const eqp::ExperimentConfig cfg = eqp::parse_config(text);
        eqp::ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = eqp::run(cfg, out, jobs);
        }
        return eqp::report_to_json(report).dump();
      },
      py::arg("config"), py::arg("out"), py::arg("jobs") = 1,
      "Runs an experiment from a JSON config string; returns report.json text.");
}
