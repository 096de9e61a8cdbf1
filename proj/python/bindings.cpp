#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>

#include "biopepa/analyzer.hpp"
#include "biopepa/cli.hpp"
#include "biopepa/error.hpp"
#include "biopepa/kinetics.hpp"

namespace py = pybind11;
using namespace biopepa;

namespace {

py::array_t<double> to_array(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  py::array_t<double> out({rows.size(), cols});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return out;
}

struct StaticErrors : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PyModel {
  LoadedModel loaded;

  static PyModel from_text(const std::string& text) {
    PyModel m{load_model(text)};
    if (!m.loaded.ok()) {
      std::ostringstream msg;
      msg << "model has errors";
      for (const auto& d : m.loaded.diagnostics) {
        if (d.severity == Severity::Error) msg << "\n  " << format_diagnostic(d, "<model>");
      }
      throw StaticErrors(msg.str());
    }
    return m;
  }

  const ReactionNetwork& net() const { return *loaded.network; }
};

py::dict simulate(const PyModel& model, const std::string& method, double stop,
                  std::size_t points, std::size_t runs, std::uint64_t seed, double step,
                  double rtol, double atol, double tau,
                  const std::map<std::string, double>& overrides, unsigned threads) {
  auto m = parse_method(method);
  if (!m) throw Error(ErrorCode::InvalidArgument, "unknown method '" + method + "'");
  RunConfig c;
  c.method = *m;
  c.stop = stop;
  c.points = points;
  c.runs = runs;
  c.seed = seed;
  c.step = step;
  c.rtol = rtol;
  c.atol = atol;
  c.tau = tau;
  c.threads = threads;
  c.overrides.assign(overrides.begin(), overrides.end());
  SimulationOutput out;
  {
    py::gil_scoped_release release;
    out = run_simulation(model.net(), c);
  }
  py::dict d;
  d["columns"] = out.columns;
  d["time"] = py::array_t<double>(out.times.size(), out.times.data());
  d["values"] = to_array(out.values, out.columns.size());
  d["std"] = out.ensemble ? py::object(to_array(out.stddev, out.columns.size())) : py::none();
  d["warnings"] = out.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bio-PEPA with locations: parse, check and simulate models.";

  static py::handle error = py::exception<Error>(m, "BioPepaError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const StaticErrors& e) {
      py::set_error(error, e.what());
    } catch (const Error& e) {
      py::set_error(error, (std::string(code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<Diagnostic>(m, "Diagnostic")
      .def_property_readonly("severity",
                             [](const Diagnostic& d) {
                               return d.severity == Severity::Error ? "error" : "warning";
                             })
      .def_readonly("code", &Diagnostic::code)
      .def_readonly("message", &Diagnostic::message)
      .def_property_readonly("line", [](const Diagnostic& d) { return d.span.line; })
      .def_property_readonly("column", [](const Diagnostic& d) { return d.span.column; })
      .def("__repr__", [](const Diagnostic& d) { return format_diagnostic(d, "<model>"); });

  m.def("check", [](const std::string& text) { return load_model(text).diagnostics; },
        py::arg("text"), "Parse and analyze model text; returns every diagnostic.");

  py::class_<PyModel>(m, "Model")
      .def(py::init(&PyModel::from_text), py::arg("text"))
      .def_static("from_file",
                  [](const std::string& path) { return PyModel::from_text(read_file(path)); },
                  py::arg("path"))
      .def_property_readonly("species",
                             [](const PyModel& p) {
                               std::vector<std::string> out;
                               for (std::size_t i = 0; i < p.net().species.size(); ++i) {
                                 out.push_back(p.net().species_name(i));
                               }
                               return out;
                             })
      .def_property_readonly("reactions",
                             [](const PyModel& p) {
                               std::vector<std::string> out;
                               for (const auto& r : p.net().reactions) out.push_back(r.action);
                               return out;
                             })
      .def_property_readonly("observables",
                             [](const PyModel& p) {
                               std::vector<std::string> out;
                               for (const auto& o : p.net().observables) out.push_back(o.name);
                               return out;
                             })
      .def_property_readonly("parameters",
                             [](const PyModel& p) {
                               auto v = resolve_parameters(p.net().parameters);
                               return std::map<std::string, double>(v.begin(), v.end());
                             })
      .def_property_readonly("initial_state",
                             [](const PyModel& p) { return p.net().initial_state; })
      .def_property_readonly("stoichiometry",
                             [](const PyModel& p) { return p.net().stoichiometry; })
      .def_property_readonly("diagnostics", [](const PyModel& p) { return p.loaded.diagnostics; })
      .def("conserved_moieties", [](const PyModel& p) { return conserved_moieties(p.net()); });

  m.def("simulate", &simulate, py::arg("model"), py::kw_only(), py::arg("method") = "ode-dopri",
        py::arg("stop"), py::arg("points"), py::arg("runs") = 1, py::arg("seed") = 0,
        py::arg("step") = 0.01, py::arg("rtol") = 1e-6, py::arg("atol") = 1e-9,
        py::arg("tau") = 0.01, py::arg("overrides") = std::map<std::string, double>{},
        py::arg("threads") = 0,
        "Simulate a model. Returns a dict with columns, time, values and std (ensembles).");
}
