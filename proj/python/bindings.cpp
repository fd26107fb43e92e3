#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "bpre/cells.hpp"
#include "bpre/environment.hpp"
#include "bpre/error.hpp"
#include "bpre/oracle.hpp"
#include "bpre/rare_event.hpp"
#include "bpre/rate.hpp"
#include "bpre/reporting.hpp"
#include "bpre/simulator.hpp"

namespace py = pybind11;
using namespace bpre;

namespace {

Side side_of(const std::string& s) {
  if (s == "lower") return Side::Lower;
  if (s == "upper") return Side::Upper;
  throw py::value_error("side must be 'lower' or 'upper'");
}

EnvironmentLaw law_of(const std::vector<std::pair<double, std::map<std::uint64_t, double>>>& comps) {
  std::vector<std::pair<double, OffspringDistribution>> out;
  for (const auto& [w, pmf] : comps) out.emplace_back(w, OffspringDistribution({pmf.begin(), pmf.end()}));
  return EnvironmentLaw(std::move(out));
}

py::dict estimate_dict(const EstimatorResult& e) {
  py::dict d;
  d["estimate"] = e.estimate;
  d["std_error"] = e.std_error;
  d["ess"] = e.ess;
  d["method"] = std::string(to_string(e.method));
  d["n"] = e.n;
  d["c"] = e.c;
  d["replicas"] = e.replicas;
  d["seed"] = e.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_bpre, m) {
  m.doc() = "Large deviations of branching processes in random environment";
  m.attr("__version__") = std::string(kToolVersion);

  static py::exception<Error> error(m, "BpreError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object code = py::str(std::string(to_string(e.code())));
      PyErr_SetObject(error.ptr(), py::make_tuple(code, e.what()).ptr());
    }
  });

  py::class_<EnvironmentLaw>(m, "EnvironmentLaw")
      .def(py::init(&law_of), py::arg("components"),
           "components: list of (weight, {offspring: probability})")
      .def_static("from_json", [](const std::string& text) { return parse_environment(text); })
      .def("to_json", &serialize_environment)
      .def_property_readonly("lbar", &EnvironmentLaw::lbar)
      .def_property_readonly("lmin", &EnvironmentLaw::lmin)
      .def_property_readonly("lmax", &EnvironmentLaw::lmax)
      .def_property_readonly("mean_p1", &EnvironmentLaw::mean_p1)
      .def_property_readonly("strongly_supercritical", &EnvironmentLaw::strongly_supercritical)
      .def("fingerprint", &EnvironmentLaw::fingerprint)
      .def("__len__", &EnvironmentLaw::size);

  m.def("psi", &psi, py::arg("env"), py::arg("c"));
  m.def("lambda_star", &lambda_star, py::arg("env"), py::arg("c"));
  m.def("log_mgf", [](const EnvironmentLaw& env, double lam) { return log_mgf(env, lam).value; });
  m.def("psi_two_env_closed_form", &psi_two_env_closed_form, py::arg("l1"), py::arg("l2"), py::arg("weight_l1"),
        py::arg("c"));
  m.def(
      "chi",
      [](const EnvironmentLaw& env, double c) {
        const ChiResult r = chi_and_tc(env, c);
        py::dict d;
        d["c"] = r.c;
        d["chi"] = r.chi;
        d["t_c"] = r.t_c;
        d["slope"] = r.slope;
        d["with_holding"] = r.kase == ChiCase::WithHolding;
        return d;
      },
      py::arg("env"), py::arg("c"));
  m.def(
      "chernoff_bound",
      [](const EnvironmentLaw& env, int n, double c, const std::string& side) {
        return chernoff_bound(env, n, c, side_of(side));
      },
      py::arg("env"), py::arg("n"), py::arg("c"), py::arg("side") = "lower");

  m.def(
      "simulate",
      [](const EnvironmentLaw& env, int n, std::uint64_t z0, std::uint64_t seed, std::uint64_t replica) {
        const Trajectory t = run(SimConfig{env, n, z0, seed, 1, 1}, replica);
        std::vector<std::string> z;
        for (const auto& v : t.z) z.push_back(to_decimal(v));
        return py::make_tuple(z, t.env_idx, t.s);
      },
      py::arg("env"), py::arg("n"), py::arg("z0") = 1, py::arg("seed") = 0, py::arg("replica") = 0,
      "Returns (populations as decimal strings, environment indices, log-mean partial sums).");

  m.def(
      "exact_distribution",
      [](const EnvironmentLaw& env, int n, std::uint64_t z0, std::uint64_t cap) {
        const ExactDistribution d = exact_zn_distribution(env, n, z0, cap);
        return py::make_tuple(d.probs, d.overflow);
      },
      py::arg("env"), py::arg("n"), py::arg("z0"), py::arg("cap"));
  m.def(
      "exact_population_tail",
      [](const EnvironmentLaw& env, int n, double c, const std::string& side, std::uint64_t z0) {
        return exact_population_tail(env, n, z0, c, side_of(side));
      },
      py::arg("env"), py::arg("n"), py::arg("c"), py::arg("side") = "lower", py::arg("z0") = 1);
  m.def(
      "exact_sn_tail",
      [](const EnvironmentLaw& env, int n, double c, const std::string& side) {
        return exact_sn_tail(env, n, c, side_of(side));
      },
      py::arg("env"), py::arg("n"), py::arg("c"), py::arg("side") = "lower");

  m.def(
      "estimate_lower",
      [](const EnvironmentLaw& env, int n, double c, std::uint64_t replicas, std::uint64_t seed, unsigned workers) {
        return estimate_dict(is_estimate_lower_full(env, n, c, replicas, seed, IsOptions{1, workers}));
      },
      py::arg("env"), py::arg("n"), py::arg("c"), py::arg("replicas"), py::arg("seed") = 0, py::arg("workers") = 1);
  m.def(
      "estimate_upper",
      [](const EnvironmentLaw& env, int n, double c, std::uint64_t replicas, std::uint64_t seed, unsigned workers) {
        return estimate_dict(is_estimate_upper(env, n, c, replicas, seed, IsOptions{1, workers}));
      },
      py::arg("env"), py::arg("n"), py::arg("c"), py::arg("replicas"), py::arg("seed") = 0, py::arg("workers") = 1);
  m.def(
      "takeoff",
      [](const EnvironmentLaw& env, int n, double c, std::uint64_t threshold, std::uint64_t replicas,
         std::uint64_t seed) {
        const TakeOffStats s = take_off_stats(env, n, c, threshold, replicas, seed);
        py::dict d;
        d["histogram"] = s.histogram;
        d["mean_fraction"] = s.mean_fraction;
        d["std_error"] = s.std_error;
        d["ess"] = s.ess;
        return d;
      },
      py::arg("env"), py::arg("n"), py::arg("c"), py::arg("threshold"), py::arg("replicas"), py::arg("seed") = 0);
  m.def(
      "cell_identity",
      [](std::map<std::uint64_t, double> law1, std::map<std::uint64_t, double> law2, int n, double c,
         std::uint64_t replicas, std::uint64_t seed) {
        CellTreeConfig cfg;
        cfg.n = n;
        cfg.law1 = OffspringDistribution({law1.begin(), law1.end()});
        cfg.law2 = OffspringDistribution({law2.begin(), law2.end()});
        cfg.c = c;
        cfg.replicas = replicas;
        cfg.seed = seed;
        const IdentityCheck r = expected_count_identity(cfg);
        return py::make_tuple(r.lhs, r.lhs_std_error, r.rhs, r.z_score);
      },
      py::arg("law1"), py::arg("law2"), py::arg("n"), py::arg("c"), py::arg("replicas"), py::arg("seed") = 0,
      "Returns (lhs, lhs_std_error, rhs, z_score).");

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config, const std::string& options, std::uint64_t seed,
         std::uint64_t replicas, unsigned workers) {
        CommandRequest rq;
        rq.command = command;
        rq.config = nlohmann::json::parse(config);
        rq.options = nlohmann::json::parse(options);
        rq.seed = seed;
        rq.replicas = replicas;
        rq.workers = workers;
        std::map<std::string, std::string> out;
        for (auto& a : execute(rq)) out[a.name] = std::move(a.content);
        return out;
      },
      py::arg("command"), py::arg("config"), py::arg("options") = "{}", py::arg("seed") = 0,
      py::arg("replicas") = 1000, py::arg("workers") = 1,
      "Runs a CLI command in memory and returns {artifact name: contents}.");
}
