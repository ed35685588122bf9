#include <doctest.h>

#include <cmath>
#include <random>

#include "medpost/conjugate.hpp"
#include "medpost/criteria.hpp"
#include "medpost/errors.hpp"
#include "oracles/oracles.hpp"
#include "test_support.hpp"

using namespace medpost;

TEST_CASE("enumerate_universe") {
    const auto all = enumerate_universe(10, {UniverseKind::all_subsets, 0, {}, std::nullopt});
    CHECK(all.size() == 1024);
    CHECK(all.prior_probs(5) == doctest::Approx(1.0 / 1024));
    CHECK(all.models.front().count() == 0);
    const auto fixed = enumerate_universe(10, {UniverseKind::fixed_size, 3, {}, std::nullopt});
    CHECK(fixed.size() == 120);
    for (const auto& m : fixed.models) CHECK(m.count() == 3);
    const auto tiny = enumerate_universe(1, {});
    CHECK(tiny.size() == 2);
    CHECK_THROWS_AS(enumerate_universe(21, {}), ConfigError);
    CHECK_THROWS_AS(enumerate_universe(3, {UniverseKind::user_list, 0, {}, std::nullopt}), ConfigError);
    const auto user = enumerate_universe(3, {UniverseKind::user_list, 0, {ModelSpec::parse("101"), ModelSpec::parse("010")},
                                             std::nullopt});
    CHECK(user.find(ModelSpec::parse("010")) == std::optional<std::size_t>(1));
    CHECK(user.nearest(ModelSpec::parse("111")) == 0);
}

TEST_CASE("posterior_model_probs") {
    const auto u = enumerate_universe(1, {});
    CHECK(posterior_model_probs(Eigen::Vector2d(0, 0), u).values.isApprox(Eigen::Vector2d(0.5, 0.5)));
    const auto p = posterior_model_probs(Eigen::Vector2d(0, std::log(3.0)), u).values;
    CHECK(p(0) == doctest::Approx(0.25));
    CHECK(p(1) == doctest::Approx(0.75));
    const auto shifted = posterior_model_probs(Eigen::Vector2d(1000, 1000 + std::log(3.0)), u).values;
    CHECK((shifted - p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(posterior_model_probs(Eigen::Vector2d(-INFINITY, -INFINITY), u), NumericError);
}

TEST_CASE("posterior_model_probs from quadrature marginals") {
    // D = 1, s = 5: universe {empty, x1}. The empty model's marginal is the
    // quadrature oracle with x = 0 (beta integrates out to its prior).
    Eigen::VectorXd x(5), y(5);
    x << 0.3, -1.2, 0.8, 1.5, -0.4;
    y << 0.5, -1.9, 1.1, 2.6, -0.2;
    const auto u = enumerate_universe(1, {});
    const NigPrior prior = NigPrior::isotropic(1, 2.0, 1.5, 0.8);
    const PowerLikelihoodConfig pl{1};
    Eigen::VectorXd lm(2);
    lm(0) = log_marginal_likelihood(Eigen::MatrixXd(5, 0), y, NigPrior::isotropic(0, 2.0, 1.5, 0.8), pl);
    lm(1) = log_marginal_likelihood(Eigen::MatrixXd(x), y, prior, pl);
    const double q0 = oracle::quadrature_log_marginal(Eigen::VectorXd::Zero(5), y, 1.5, 0.8, 0.0, 2.0, 1);
    const double q1 = oracle::quadrature_log_marginal(x, y, 1.5, 0.8, 0.0, 2.0, 1);
    const double p1_oracle = 1.0 / (1.0 + std::exp(q0 - q1));
    CHECK(posterior_model_probs(lm, u).values(1) == doctest::Approx(p1_oracle).epsilon(1e-6));
}

TEST_CASE("aic_r and bic_r") {
    CHECK(aic_r(-100, 3, 5) == 1008.0);
    CHECK(aic_r(-12.5, 2, 1) == -2.0 * -12.5 + 2.0 * 3.0);
    CHECK(bic_r(0.0, 0, std::exp(2.0), 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(bic_r(0.0, 0, 0.5, 1), ConfigError);
}

TEST_CASE("median_probability_model and inclusion_probs") {
    CHECK(median_probability_model({Eigen::Vector3d(0.9, 0.5, 0.49)}).to_string() == "110");
    CHECK(median_probability_model({Eigen::Vector3d::Zero()}).count() == 0);

    const auto u2 = enumerate_universe(2, {});  // {}, {1}, {2}, {1,2}
    CriterionVector probs{CriterionKind::posterior_prob, Eigen::Vector4d(0.1, 0.2, 0.3, 0.4), 0};
    const auto incl = inclusion_probs(probs, u2);
    CHECK(incl.p(0) == doctest::Approx(0.2 + 0.4));
    CHECK(incl.p(1) == doctest::Approx(0.3 + 0.4));
    CHECK(median_probability_model(incl).to_string() == "11");

    const auto u1 = enumerate_universe(1, {});
    CHECK(inclusion_probs({CriterionKind::posterior_prob, Eigen::Vector2d(0.3, 0.7), 0}, u1).p(0) == doctest::Approx(0.7));

    const auto u4 = enumerate_universe(4, {});
    const auto flat = inclusion_probs({CriterionKind::posterior_prob, u4.prior_probs, 0}, u4);
    CHECK((flat.p.array() - 0.5).abs().maxCoeff() < 1e-12);

    const auto uf = enumerate_universe(3, {UniverseKind::user_list, 0, {ModelSpec::parse("111")}, std::nullopt});
    CHECK(inclusion_probs({CriterionKind::posterior_prob, Eigen::VectorXd::Ones(1), 0}, uf).p == Eigen::Vector3d::Ones());
    CHECK_THROWS_AS(inclusion_probs(probs, u1), ConfigError);
}

TEST_CASE("median model is monotone in a model's probability") {
    const auto u = enumerate_universe(3, {});
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd p(8);
        for (int k = 0; k < 8; ++k) p(k) = unif(gen);
        p /= p.sum();
        const auto k = static_cast<std::size_t>(trial % 8);
        const auto before = median_probability_model(inclusion_probs({CriterionKind::posterior_prob, p, 0}, u));
        Eigen::VectorXd q = p;
        q(static_cast<Eigen::Index>(k)) += 0.3;
        q /= q.sum();
        // For d in model k, (p_d + c) / (1 + c) >= p_d, so d cannot drop out.
        const auto after = median_probability_model(inclusion_probs({CriterionKind::posterior_prob, q, 0}, u));
        for (const auto d : u.models[k].indices())
            if (before.contains(d)) CHECK(after.contains(d));
    }
}

TEST_CASE("bma_moments") {
    const auto one = bma_moments(Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(1, 2.0),
                                 Eigen::VectorXd::Ones(1));
    CHECK(one.mean == 3.0);
    CHECK(one.variance == 2.0);
    const auto two = bma_moments(Eigen::Vector2d(0, 2), Eigen::Vector2d(1, 1), Eigen::Vector2d(0.5, 0.5));
    CHECK(two.mean == 1.0);
    CHECK(two.variance == 2.0);

    std::mt19937 gen(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd m(5), v(5), p(5);
        for (int k = 0; k < 5; ++k) {
            m(k) = 10.0 * unif(gen) - 5.0;
            v(k) = unif(gen);
            p(k) = unif(gen);
        }
        p /= p.sum();
        // E[Y^2] - E[Y]^2 by enumeration of the mixture components.
        double mean = 0.0, second = 0.0;
        for (int k = 0; k < 5; ++k) {
            mean += p(k) * m(k);
            second += p(k) * (v(k) + m(k) * m(k));
        }
        const auto got = bma_moments(m, v, p);
        CHECK(got.mean == doctest::Approx(mean).epsilon(1e-12));
        CHECK(got.variance == doctest::Approx(second - mean * mean).epsilon(1e-10));
        CHECK(got.variance >= 0.0);
    }
}

TEST_CASE("best_model tie-break prefers smaller then lexicographic") {
    const auto u = enumerate_universe(2, {});  // {}, {1}, {2}, {1,2}
    CHECK(best_model(Eigen::Vector4d(1, 0, 0, 0), u, false) == 1);
    CHECK(best_model(Eigen::Vector4d(5, 1, 1, 1), u, false) == 1);
    CHECK(best_model(Eigen::Vector4d(1, 1, 1, 1), u, true) == 0);
    CHECK(tie_break_prefers(ModelSpec::parse("100"), ModelSpec::parse("010")));
    CHECK(tie_break_prefers(ModelSpec::parse("001"), ModelSpec::parse("110")));
}
