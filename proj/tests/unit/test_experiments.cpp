#include <doctest.h>

#include "medpost/errors.hpp"
#include "medpost/experiments.hpp"

using namespace medpost;

TEST_CASE("rmse and band") {
    CHECK(rmse(Eigen::Vector2d(1, 3), Eigen::Vector2d(1, 1)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(rmse(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)) == 0.0);
    CHECK_THROWS(rmse(Eigen::Vector2d(1, 3), Eigen::Vector3d(1, 1, 1)));
    std::vector<double> v;
    for (int i = 0; i <= 100; ++i) v.push_back(i);
    const Band b = band(v);
    CHECK(b.mean == 50.0);
    CHECK(b.lo == doctest::Approx(2.5));
    CHECK(b.hi == doctest::Approx(97.5));
    CHECK(b.count == 101);
}

TEST_CASE("experiment kinds round trip") {
    for (auto k : {ExperimentKind::contamination, ExperimentKind::magnitude, ExperimentKind::coverage,
                   ExperimentKind::coef_coverage, ExperimentKind::bigdata, ExperimentKind::realdata,
                   ExperimentKind::concentration}) {
        CHECK(parse_experiment_kind(to_string(k)) == k);
        default_spec(k).validate();
    }
    CHECK_THROWS_AS(parse_experiment_kind("nope"), ConfigError);
}

TEST_CASE("small contamination run is deterministic") {
    ExperimentSpec spec = default_spec(ExperimentKind::contamination);
    spec.n = 600;
    spec.d = 5;
    spec.trials = 1;
    spec.grid = {1};
    spec.r_values = {1, 5};
    spec.methods = {Method::bma};
    spec.strategies = {Strategy::model_combination};
    spec.mcmc.iterations = 300;
    spec.mcmc.burn_in = 100;
    const auto a = run_contamination(spec);
    const auto b = run_contamination(spec);
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].rmse == b[i].rmse);
        CHECK(a[i].selected_model == b[i].selected_model);
        CHECK(a[i].rmse >= 0.0);
    }
    const auto fig = figure_data(ExperimentKind::contamination, a);
    CHECK(!fig.empty());
    CHECK(!assess(spec, a).empty());
}
