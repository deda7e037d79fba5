#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "balloc/cli.hpp"
#include "balloc/error.hpp"
#include "balloc/experiments.hpp"
#include "balloc/graphs.hpp"
#include "balloc/potentials.hpp"
#include "balloc/process.hpp"
#include "balloc/selftest.hpp"
#include "balloc/weights.hpp"

namespace py = pybind11;
using namespace balloc;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

ProcessSpec make_spec(const std::string& process, std::size_t n, const std::string& graph, std::uint64_t graph_seed) {
  ProcessSpec spec = parse_process_spec(process);
  if (spec.kind == ProcessKind::kGraphical) {
    if (graph.empty()) throw ValidationError("graphical needs a graph spec");
    spec.graph = std::make_shared<RegularGraph>(build_from_spec(graph, n, graph_seed));
  }
  return spec;
}

}  // namespace

PYBIND11_MODULE(_balloc, m) {
  m.doc() = "Balanced allocations simulator bindings";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("allocation_vector", [](const std::string& process, std::size_t n) {
    return to_vec(allocation_vector(parse_process_spec(process), n).probs());
  }, py::arg("process"), py::arg("n"));

  m.def("final_loads", [](const std::string& process, std::size_t n, std::uint64_t m, std::uint64_t seed,
                          const std::string& weights, const std::string& graph) {
    ProcessSpec spec = make_spec(process, n, graph, seed);
    spec.weights = WeightDistribution::parse(weights);
    return to_vec(run_to_state(spec, n, m, seed).loads());
  }, py::arg("process"), py::arg("n"), py::arg("m"), py::arg("seed") = 1, py::arg("weights") = "unit",
        py::arg("graph") = "");

  m.def("gap", [](const std::vector<double>& loads) { return gap(LoadState::from_loads(loads)); }, py::arg("loads"));

  m.def("potential", [](const std::vector<double>& normalized, double gamma) {
    auto r = potential_of(normalized, gamma, PotentialMode::kAuto, false);
    py::dict d;
    d["phi"] = r.phi;
    d["psi"] = r.psi;
    d["gamma_total"] = r.gamma_total;
    d["log_gamma_total"] = r.log_gamma_total;
    d["log_space"] = r.log_space;
    return d;
  }, py::arg("normalized"), py::arg("gamma"));

  m.def("key_lemma_constant", py::overload_cast<double>(&key_lemma_constant), py::arg("delta"));

  m.def("certify_key_lemma", [](const std::vector<double>& sorted_y, const std::vector<double>& p, double delta,
                                double epsilon, double gamma) {
    auto r = certify_key_lemma_sorted(sorted_y, ProbabilityVector(p), ConditionParams(delta, epsilon), gamma);
    py::dict d;
    d["case"] = to_string(r.which);
    d["drift"] = r.drift;
    d["bound"] = r.bound;
    d["slack"] = r.slack;
    d["pass"] = r.pass;
    return d;
  }, py::arg("sorted_y"), py::arg("p"), py::arg("delta"), py::arg("epsilon"), py::arg("gamma"));

  m.def("conductance_exact", [](const std::string& graph, std::size_t n, std::uint64_t seed) {
    return conductance_exact(build_from_spec(graph, n, seed));
  }, py::arg("graph"), py::arg("n"), py::arg("seed") = 1);

  m.def("s_constant", [](const std::string& weights) { return s_constant(WeightDistribution::parse(weights)); },
        py::arg("weights"));

  m.def("simulate_csv", [](const std::string& config_text) {
    auto cfg = ExperimentConfig::parse(config_text);
    Table t;
    {
      py::gil_scoped_release release;
      t = sweep(cfg);
    }
    std::ostringstream out;
    write_csv(t, out);
    return out.str();
  }, py::arg("config_text"));

  m.def("selftest", [](const std::string& filter, std::uint64_t seed) {
    SelftestOptions opts;
    opts.filter = filter;
    opts.seed = seed;
    std::vector<PropertyResult> results;
    {
      py::gil_scoped_release release;
      results = run_selftest(opts);
    }
    py::list out;
    for (const auto& r : results) out.append(py::make_tuple(r.module + "." + r.name, r.pass, r.detail));
    return out;
  }, py::arg("filter") = "", py::arg("seed") = 20240601);

  m.def("cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli_main(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}
