#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "medpost/config.hpp"
#include "medpost/engine.hpp"
#include "medpost/errors.hpp"
#include "medpost/experiments.hpp"
#include "medpost/rng.hpp"

namespace py = pybind11;
using namespace medpost;

namespace {

NigPrior make_prior(Eigen::Index p, double scale, double a, double b) { return NigPrior::isotropic(p, scale, a, b); }

// Config values arrive as a dict of str -> str/int/float/bool.
KeyValueConfig to_config(const py::dict& d) {
    KeyValueConfig cfg;
    for (const auto& [k, v] : d) {
        std::string value;
        if (py::isinstance<py::bool_>(v))
            value = v.cast<bool>() ? "true" : "false";
        else
            value = py::str(v).cast<std::string>();
        cfg.set(k.cast<std::string>(), value);
    }
    return cfg;
}

py::dict result_to_dict(const AggregateResult& r, const ModelUniverse& u) {
    py::dict out;
    out["method"] = to_string(r.method);
    out["strategy"] = to_string(r.strategy);
    out["star_probs"] = r.star_probs;
    out["criterion"] = r.criterion;
    out["final_prediction"] = r.final_prediction;
    out["per_model_predictions"] = r.per_model_predictions;
    out["predictive_quantiles"] = r.predictive_quantiles;
    out["selected_model"] = r.selected_model.to_string();
    out["selected_index"] = r.selected_index;
    out["local_choices"] = r.local_choices;
    out["coef_mean"] = r.coef_mean;
    std::vector<std::string> models;
    for (const auto& m : u.models) models.push_back(m.to_string());
    out["models"] = models;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Robust divide-and-conquer Bayesian model selection";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "log_marginal_likelihood",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double prior_scale, double a, double b, int r) {
            return log_marginal_likelihood(x, y, make_prior(x.cols(), prior_scale, a, b), {r});
        },
        py::arg("x"), py::arg("y"), py::arg("prior_scale") = 100.0, py::arg("a") = 1.0, py::arg("b") = 1.0,
        py::arg("r") = 1);

    m.def(
        "sample_posterior",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double prior_scale, double a, double b, int r,
           int iterations, int burn_in, std::uint64_t seed) {
            McmcConfig mc;
            mc.iterations = iterations;
            mc.burn_in = burn_in;
            mc.seed = seed;
            const ModelSpec all(std::vector<bool>(static_cast<std::size_t>(x.cols()), true));
            const auto d = sample_posterior(x, y, all, make_prior(x.cols(), prior_scale, a, b), {r}, mc);
            return py::make_tuple(d.beta, d.sigma2);
        },
        py::arg("x"), py::arg("y"), py::arg("prior_scale") = 100.0, py::arg("a") = 1.0, py::arg("b") = 1.0,
        py::arg("r") = 1, py::arg("iterations") = 1000, py::arg("burn_in") = 500, py::arg("seed") = 0,
        "Returns (beta draws T x p, sigma2 draws T).");

    m.def(
        "geometric_median",
        [](const Eigen::MatrixXd& points, double tol, int max_iters) {
            WeiszfeldConfig cfg;
            cfg.tol = tol;
            cfg.max_iters = max_iters;
            return geometric_median_solve(points, cfg).point;
        },
        py::arg("points"), py::arg("tol") = 1e-10, py::arg("max_iters") = 1000, "Geometric median of the rows.");
    m.def("aggregate_model_probs", [](const Eigen::MatrixXd& p) { return aggregate_model_probs(p); }, py::arg("probs"));

    m.def(
        "spike_slab_inclusion",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int r, int iterations, int burn_in, std::uint64_t seed) {
            McmcConfig mc;
            mc.iterations = iterations;
            mc.burn_in = burn_in;
            mc.seed = seed;
            return ss_run_chain(x, y, SpikeSlabPrior{}, {r}, mc).inclusion_freq;
        },
        py::arg("x"), py::arg("y"), py::arg("r") = 1, py::arg("iterations") = 1000, py::arg("burn_in") = 500,
        py::arg("seed") = 0);

    m.def(
        "generate_synthetic",
        [](Eigen::Index n, Eigen::Index d, Eigen::Index n_true, double noise_sd, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.n = n;
            spec.d = d;
            spec.n_true = n_true;
            spec.noise_sd = noise_sd;
            spec.seed = seed;
            const auto s = generate_synthetic(spec);
            return py::make_tuple(s.data.x(), s.data.y(), s.beta_true);
        },
        py::arg("n") = 5000, py::arg("d") = 10, py::arg("n_true") = 3, py::arg("noise_sd") = 1.0, py::arg("seed") = 0,
        "Returns (x, y, beta_true).");

    m.def(
        "fit",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& x_test, const py::dict& config) {
            const PipelineConfig cfg = pipeline_from_config(to_config(config));
            const Dataset train(x, y);
            const SubsetRun run = compute_subset_summaries(train, x_test, cfg);
            const auto res = combine(cfg.strategy, run.summaries, run.universe, cfg.method, cfg.weiszfeld);
            return result_to_dict(res, run.universe);
        },
        py::arg("x"), py::arg("y"), py::arg("x_test"), py::arg("config") = py::dict(),
        "Partition, per-subset inference and aggregation. `config` takes the fit config keys.");

    m.def(
        "run_experiment",
        [](const std::string& kind, const py::dict& overrides) {
            const ExperimentKind k = parse_experiment_kind(kind);
            const ExperimentSpec spec = experiment_from_config(k, to_config(overrides));
            const auto records = run_experiment(spec);
            py::list rows;
            for (const auto& r : records) {
                py::dict row;
                row["method"] = to_string(r.method);
                row["strategy"] = to_string(r.strategy);
                row["r"] = r.r;
                row["grid_value"] = r.grid_value;
                row["trial"] = r.trial;
                row["rmse"] = r.rmse;
                row["selected_model"] = r.selected_model;
                if (r.covered) row["covered"] = *r.covered;
                if (r.selected_correct) row["selected_correct"] = *r.selected_correct;
                rows.append(row);
            }
            py::list verdicts;
            for (const auto& a : assess(spec, records)) verdicts.append(py::make_tuple(a.name, a.pass, a.detail));
            return py::make_tuple(rows, verdicts);
        },
        py::arg("kind"), py::arg("overrides") = py::dict(), "Returns (records, assessments).");

    m.def("derive_seed", [](std::uint64_t master, std::uint64_t subset, std::uint64_t chain, std::uint64_t purpose) {
        return derive_seed(master, subset, chain, static_cast<SeedPurpose>(purpose));
    });
}
