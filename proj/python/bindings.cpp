#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "carate/bounds.hpp"
#include "carate/config.hpp"
#include "carate/harness.hpp"

namespace py = pybind11;
using namespace carate;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_numpy(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<int> to_numpy(const std::vector<int>& v) {
    return py::array_t<int>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> to_numpy(const Matrix& m) {
    return py::array_t<double>({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())},
                               m.data().data());
}

Matrix to_matrix(const Array& z) {
    const auto b = z.request();
    if (b.ndim == 1) {
        Matrix m(static_cast<std::size_t>(b.shape[0]), 1);
        std::copy_n(z.data(), b.shape[0], m.data().begin());
        return m;
    }
    if (b.ndim != 2) throw DataError("covariates must be a 1-D or 2-D array");
    Matrix m(static_cast<std::size_t>(b.shape[0]), static_cast<std::size_t>(b.shape[1]));
    std::copy_n(z.data(), b.shape[0] * b.shape[1], m.data().begin());
    return m;
}

template <class T>
std::vector<T> to_vector(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

TargetProportions make_pi(int strata, const std::string& proportions) {
    return builtin_proportions(strata, parse_proportion_mode(proportions));
}

py::dict sample(const std::string& dgp, std::size_t n, std::uint64_t seed) {
    const auto s = sample_population(DgpRegistry{}.make(dgp), n, seed);
    py::dict out;
    out["y0"] = to_numpy(s.y0);
    out["y1"] = to_numpy(s.y1);
    out["z"] = to_numpy(s.z);
    return out;
}

py::array_t<int> labels(const Array& z, int strata) { return to_numpy(builtin_strata(strata).labels(to_matrix(z))); }

py::array_t<int> assign_units(const IntArray& labels, const std::string& mechanism, int strata,
                              const std::string& proportions, std::uint64_t seed) {
    return to_numpy(assign(parse_mechanism(mechanism), to_vector(labels), make_pi(strata, proportions), seed));
}

py::dict estimate(const Array& y, const IntArray& a, const Array& z, std::optional<IntArray> stratum,
                  int strata, const std::string& proportions, std::optional<std::string> dgp, int folds,
                  const std::string& propensity, std::uint64_t seed) {
    auto zm = to_matrix(z);
    auto lab = stratum ? to_vector(*stratum) : builtin_strata(strata).labels(zm);
    const auto frame = make_observed_frame(std::move(zm), std::move(lab), to_vector(a), to_vector(y), strata);
    std::optional<PopulationSpec> spec;
    if (dgp) spec = DgpRegistry{}.make(*dgp);
    const auto r = estimate_all(frame, spec ? &*spec : nullptr, make_pi(strata, proportions), folds,
                                KernelSpec{}, parse_propensity_mode(propensity), ReplicationSeeds::from(seed).folds);
    py::dict out;
    for (std::size_t e = 0; e < r.estimates.size(); ++e) {
        if (e == 0 && !r.has_infeasible) continue;
        out[py::str(to_string(r.estimates[e].estimator))] = r.estimates[e].value;
    }
    return out;
}

py::dict bounds(const std::string& dgp, int strata, const std::string& proportions, std::size_t draws,
                std::uint64_t seed, unsigned jobs) {
    const auto b = bound_report(DgpRegistry{}.make(dgp), builtin_strata(strata), make_pi(strata, proportions),
                                draws, seed, jobs);
    py::dict out;
    out["v_star"] = b.v_star;
    out["v_sat"] = b.v_sat;
    out["mc_se_vstar"] = b.mc_se_vstar;
    out["mc_se_vsat"] = b.mc_se_vsat;
    out["draws"] = b.mc_draws;
    return out;
}

py::tuple simulate(const std::string& config_text, std::optional<std::size_t> reps,
                   std::optional<std::uint64_t> seed, std::optional<unsigned> jobs) {
    std::istringstream in(config_text);
    auto c = parse_config(in, "<config>");
    if (reps) c.reps = *reps;
    if (seed) c.seed = *seed;
    if (jobs) c.jobs = *jobs;
    SimulationTable t;
    {
        py::gil_scoped_release release;
        t = run_table(c);
    }
    return py::make_tuple(results_csv(t), render_table(t));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ATE estimation under covariate-adaptive randomization";
    m.attr("__version__") = CARATE_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

    m.def("builtin_dgps", [] { return DgpRegistry{}.names(); });
    m.def("true_ate", [](const std::string& dgp) { return DgpRegistry{}.make(dgp).true_ate; }, py::arg("dgp"));
    m.def("sample", &sample, py::arg("dgp"), py::arg("n"), py::arg("seed") = 1,
          "Potential outcomes y0, y1 and covariates z for n units.");
    m.def("strata_labels", &labels, py::arg("z"), py::arg("strata") = 5,
          "1-based stratum labels from the first covariate.");
    m.def("assign", &assign_units, py::arg("labels"), py::arg("mechanism") = "spbr", py::arg("strata") = 5,
          py::arg("proportions") = "constant", py::arg("seed") = 1);
    m.def("estimate", &estimate, py::arg("y"), py::arg("a"), py::arg("z"), py::arg("stratum") = py::none(),
          py::arg("strata") = 5, py::arg("proportions") = "constant", py::arg("dgp") = py::none(),
          py::arg("folds") = 2, py::arg("propensity") = "true_pi", py::arg("seed") = 1,
          "Estimates keyed by estimator name. The infeasible estimator needs dgp.");
    m.def("bounds", &bounds, py::arg("dgp"), py::arg("strata") = 5, py::arg("proportions") = "constant",
          py::arg("draws") = kDefaultOracleDraws, py::arg("seed") = 1, py::arg("jobs") = 1);
    m.def("simulate", &simulate, py::arg("config"), py::arg("reps") = py::none(), py::arg("seed") = py::none(),
          py::arg("jobs") = py::none(), "Runs a study config; returns (results CSV, rendered table).");
    m.def("replication_seed",
          [](std::uint64_t master, const std::string& dgp, int strata, const std::string& proportions,
             const std::string& mechanism, std::size_t n, std::size_t rep) {
              return replication_seed(master, {dgp, strata, proportions, parse_mechanism(mechanism), n}, rep);
          },
          py::arg("master"), py::arg("dgp"), py::arg("strata"), py::arg("proportions"), py::arg("mechanism"),
          py::arg("n"), py::arg("rep"));
}
