// Python bindings. Structured values cross the boundary as JSON text.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rai_forge/data.hpp"
#include "rai_forge/ensemble.hpp"
#include "rai_forge/error.hpp"
#include "rai_forge/experiments.hpp"
#include "rai_forge/json_io.hpp"
#include "rai_forge/solvers.hpp"
#include "rai_forge/uncertainty.hpp"

namespace py = pybind11;
using namespace raiforge;

namespace {

SyntheticKind kind_of(const std::string& which) {
  if (which == "I") return SyntheticKind::DatasetI;
  if (which == "II") return SyntheticKind::DatasetII;
  throw InvalidArgument("dataset must be I or II");
}

UncertaintySet bind_set(const std::string& set_json, std::size_t n, std::vector<int> groups) {
  return UncertaintySet(set_spec_from_json(parse_json(set_json)), n, std::move(groups));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "rai_forge core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<InvalidSpec>(m, "InvalidSpec", base.ptr());
  py::register_exception<InvalidDataset>(m, "InvalidDataset", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<InfeasibleSet>(m, "InfeasibleSet", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  m.def("gen_data", [](const std::string& which, std::size_t n, std::uint64_t seed, const std::string& path) {
    save_csv(generate({kind_of(which), n, seed}), path);
  });

  m.def("train", [](const std::string& config_json, const std::string& csv_path) {
    const SolverConfig cfg = config_from_json(parse_json(config_json));
    const Dataset data = load_csv(csv_path);
    SolveResult res;
    {
      py::gil_scoped_release release;
      res = solve(data, cfg);
    }
    return py::make_tuple(to_json(res.ensemble).dump(), res.trace.to_csv());
  });

  m.def("evaluate", [](const std::string& model_json, const std::string& csv_path, const std::string& set_json) {
    const Ensemble q = ensemble_from_json(parse_json(model_json));
    const Dataset data = load_csv(csv_path);
    const auto spec = set_spec_from_json(parse_json(set_json));
    return to_json(metrics(q.normalized(), data, UncertaintySet::for_dataset(spec, data))).dump();
  });

  m.def("regularized_argmax",
        [](const std::string& set_json, const std::vector<double>& cum_losses, double eta, std::vector<int> groups) {
          return regularized_argmax(bind_set(set_json, cum_losses.size(), std::move(groups)), cum_losses, {eta});
        },
        py::arg("set_json"), py::arg("cum_losses"), py::arg("eta"), py::arg("groups") = std::vector<int>{});

  m.def("linear_max_oracle",
        [](const std::string& set_json, const std::vector<double>& losses, std::vector<int> groups) {
          const auto r = linear_max_oracle(bind_set(set_json, losses.size(), std::move(groups)), losses);
          return py::make_tuple(r.value, r.weights);
        },
        py::arg("set_json"), py::arg("losses"), py::arg("groups") = std::vector<int>{});

  m.def("cvar_capped_projection", [](const std::vector<double>& scores, double cap) {
    return cvar_capped_projection(scores, cap);
  });

  m.def("bench", [](const std::string& experiment, std::size_t seeds) {
    const Experiment e = parse_experiment(experiment);
    py::gil_scoped_release release;
    return run_bench(e, seeds).to_csv();
  });
}
