#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "paretolab/config.hpp"
#include "paretolab/dynamics.hpp"
#include "paretolab/errors.hpp"
#include "paretolab/experiments.hpp"
#include "paretolab/inference.hpp"
#include "paretolab/io.hpp"
#include "paretolab/model.hpp"
#include "paretolab/network.hpp"
#include "paretolab/version.hpp"

namespace py = pybind11;
using namespace paretolab;

namespace {

py::dict fit_to_dict(const ParetoFit& f) {
  py::dict d;
  d["alpha_hat"] = f.alpha_hat;
  d["x_min"] = f.x_min;
  d["std_error"] = f.std_error;
  d["ks_distance"] = f.ks_distance;
  d["ks_critical_1pct"] = ks_critical_value_1pct(f.n_tail);
  d["n_tail"] = f.n_tail;
  return d;
}

// Summary JSON of a run plus the time series CSV, without wall-clock meta.
py::tuple run(const std::string& config_json) {
  const auto config = parse_config(config_json);
  ExperimentReport report;
  {
    py::gil_scoped_release release;
    report = run_experiment(config);
  }
  RunMeta meta;
  meta.version = std::string(kVersion);
  return py::make_tuple(summary_json(report, config, meta), timeseries_csv(report.trajectory),
                        report.final_wealths);
}

std::vector<double> kesten_simulate(std::size_t n, double alpha, double sigma, double x_min,
                                    std::uint64_t steps, std::uint64_t seed) {
  KestenParams p{target_alpha_to_drift(alpha, sigma), sigma, x_min};
  KestenEngine engine(make_agents(n, x_min), p, seed);
  {
    py::gil_scoped_release release;
    engine.run(steps);
  }
  return wealths_of(engine.agents());
}

py::dict exchange_simulate(std::size_t n, std::size_t m, double gamma, double f,
                           std::uint64_t steps, std::uint64_t seed) {
  ExchangeParams p;
  p.gamma = gamma;
  p.f = f;
  ExchangeEngine engine(generate_scale_free(n, m, derive_seed(seed, 1)), make_agents(n, 1.0), p,
                        derive_seed(seed, 2));
  {
    py::gil_scoped_release release;
    engine.run(steps);
  }
  py::dict d;
  d["wealths"] = wealths_of(engine.agents());
  d["omega"] = engine.accounts().omega;
  d["lambda"] = engine.accounts().lambda;
  d["noop_steps"] = engine.noop_steps();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "paretolab core: wealth-exchange Monte Carlo and Pareto tail inference";
  m.attr("__version__") = std::string(kVersion);

  auto base = py::register_exception<Error>(m, "ParetolabError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<RunError>(m, "RunError", base.ptr());

  m.def("resolve_config", [](const std::string& text) { return to_json(parse_config(text), 2); },
        py::arg("config_json"));
  m.def("config_digest", [](const std::string& text) { return config_digest(parse_config(text)); },
        py::arg("config_json"));
  m.def("run", &run, py::arg("config_json"));

  m.def("fit_pareto", [](const std::vector<double>& xs) { return fit_to_dict(fit_pareto(xs)); },
        py::arg("samples"));
  m.def("pareto_mle",
        [](const std::vector<double>& xs, double x_min) { return fit_to_dict(pareto_mle(xs, x_min)); },
        py::arg("samples"), py::arg("x_min"));
  m.def("select_xmin", [](const std::vector<double>& xs) { return select_xmin(xs); },
        py::arg("samples"));
  m.def("hill_estimator",
        [](const std::vector<double>& xs, std::size_t k) { return hill_estimator(xs, k); },
        py::arg("samples"), py::arg("k"));
  m.def("gini", [](const std::vector<double>& xs) { return gini(xs); }, py::arg("wealths"));
  m.def(
      "alpha_from_flows",
      [](const std::vector<double>& mean_log_wealth, const std::vector<double>& log_omega) {
        if (mean_log_wealth.size() != log_omega.size()) {
          throw DataError("mean_log_wealth and log_omega differ in length");
        }
        std::vector<FlowPoint> pts(log_omega.size());
        for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {mean_log_wealth[i], log_omega[i]};
        const auto f = alpha_from_flows(pts);
        py::dict d;
        d["alpha_hat"] = f.alpha_hat;
        d["alpha_std_error"] = f.alpha_std_error;
        d["slope"] = f.slope;
        d["slope_std_error"] = f.slope_std_error;
        d["intercept"] = f.intercept;
        return d;
      },
      py::arg("mean_log_wealth"), py::arg("log_omega"));
  m.def("target_alpha_to_drift", &target_alpha_to_drift, py::arg("alpha"), py::arg("sigma"));

  m.def(
      "scale_free_network",
      [](std::size_t n, std::size_t links, std::uint64_t seed) {
        const auto net = generate_scale_free(n, links, seed);
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& e : net.edges()) out.emplace_back(e.u, e.v);
        return out;
      },
      py::arg("n"), py::arg("m"), py::arg("seed"));
  m.def("kesten_simulate", &kesten_simulate, py::arg("n"), py::arg("alpha"), py::arg("sigma") = 0.3,
        py::arg("x_min") = 1.0, py::arg("steps") = 2000, py::arg("seed") = 0);
  m.def("exchange_simulate", &exchange_simulate, py::arg("n"), py::arg("m") = 2,
        py::arg("gamma") = 1.0, py::arg("f") = 0.1, py::arg("steps") = 10000,
        py::arg("seed") = 0);
}
