#include "dngo/acquisition.hpp"
#include "dngo/benchmarks.hpp"
#include "dngo/config.hpp"
#include "dngo/error.hpp"
#include "dngo/journal.hpp"
#include "dngo/optimizer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace dngo;

namespace {

ParameterSpace make_space(const std::vector<std::pair<double, double>>& bounds) {
  std::vector<Dimension> dims;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    dims.push_back({"x" + std::to_string(i + 1), bounds[i].first, bounds[i].second});
  }
  return ParameterSpace(std::move(dims));
}

RunConfig config_from(const std::string& json_text) {
  nlohmann::json patch;
  try {
    patch = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", e.what());
  }
  return parse_run_config(patch);
}

Outcome outcome_from(const std::optional<double>& y) { return y ? Outcome::value(*y) : Outcome::invalid(); }

}  // namespace

PYBIND11_MODULE(_dngo, m) {
  m.doc() = "Bayesian optimization with adaptive neural basis functions";

  py::register_exception<Error>(m, "EngineError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("engine_version", &engine_version);
  m.def("problem_names", &problem_names);
  m.def("expected_improvement", &expected_improvement, py::arg("mean"), py::arg("sd"), py::arg("f_best"));
  m.def("branin", &branin, py::arg("x1"), py::arg("x2"));
  m.def("hartmann6", &hartmann6, py::arg("x"));

  m.def(
      "evaluate",
      [](const std::string& name, const Vector& x, double noise, std::uint64_t noise_seed, std::uint64_t index) {
        const Problem p = make_problem(name, noise, noise_seed);
        return p.evaluate(x, index).maybe_value();
      },
      py::arg("problem"), py::arg("x"), py::arg("noise") = 0.0, py::arg("noise_seed") = 0, py::arg("index") = 0,
      "Evaluate a benchmark at native x; None means the point is infeasible.");

  m.def(
      "default_config", [] { return to_json(RunConfig{}).dump(); }, "Default run configuration as JSON text.");

  m.def(
      "run",
      [](const std::string& config_json, const std::string& journal_path) {
        const RunConfig cfg = config_from(config_json);
        std::vector<RunRecord> recs;
        {
          py::gil_scoped_release release;
          recs = run_to_journal(cfg, 0, journal_path);
        }
        py::list out;
        for (const auto& r : recs) {
          py::dict d;
          d["iteration"] = r.iteration;
          d["x"] = r.x_native;
          d["y"] = r.outcome.maybe_value();
          d["incumbent"] = r.incumbent;
          out.append(d);
        }
        return out;
      },
      py::arg("config_json"), py::arg("journal_path"),
      "Run one configured benchmark, journaling to journal_path. Returns the records.");

  m.def(
      "replay",
      [](const std::string& journal_path) {
        const auto report = replay(read_journal(journal_path));
        return py::make_tuple(report.ok, report.message);
      },
      py::arg("journal_path"));

  py::class_<Suggestion>(m, "Suggestion")
      .def_readonly("index", &Suggestion::index)
      .def_readonly("x", &Suggestion::x_native)
      .def_readonly("x_unit", &Suggestion::x_unit)
      .def_readonly("from_design", &Suggestion::from_design)
      .def_readonly("pending_before", &Suggestion::pending_before);

  py::class_<Optimizer>(m, "Optimizer")
      .def(py::init([](const std::vector<std::pair<double, double>>& bounds, const std::string& config_json,
                       std::uint64_t seed) {
             return Optimizer(make_space(bounds), config_from(config_json).engine, seed);
           }),
           py::arg("bounds"), py::arg("config_json") = "{}", py::arg("seed") = 0)
      .def("suggest", &Optimizer::suggest, py::call_guard<py::gil_scoped_release>())
      .def(
          "observe", [](Optimizer& o, const Vector& x, std::optional<double> y) { o.observe(x, outcome_from(y)); },
          py::arg("x"), py::arg("y"), "Record an outcome; y=None marks x infeasible.")
      .def("incumbent", &Optimizer::incumbent)
      .def("best_observed", &Optimizer::best_observed)
      .def_property_readonly("n_pending", [](const Optimizer& o) { return o.pending().size(); })
      .def_property_readonly("n_observations", [](const Optimizer& o) { return o.dataset().size(); })
      .def("set_logger", &Optimizer::set_logger);
}
