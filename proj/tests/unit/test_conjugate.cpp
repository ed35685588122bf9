#include <doctest.h>

#include <cmath>
#include <numeric>

#include "medpost/conjugate.hpp"
#include "medpost/errors.hpp"
#include "oracles/oracles.hpp"
#include "test_support.hpp"

using namespace medpost;

namespace {

NigPrior make_prior(Eigen::Index p, double scale, double a = 1.0, double b = 1.0) {
    return NigPrior::isotropic(p, scale, a, b);
}

// Max over entries of |gibbs - exact| / SE, SE from batch means.
double worst_z(const NigPosteriorDraws& d, const oracle::NigMoments& exact) {
    const auto p = d.beta.cols();
    double worst = 0.0;
    const Eigen::VectorXd mean = d.beta.colwise().mean().transpose();
    for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::VectorXd col = d.beta.col(i);
        worst = std::max(worst, std::abs(mean(i) - exact.mean(i)) / oracle::batch_means_se(col));
        for (Eigen::Index j = 0; j <= i; ++j) {
            const Eigen::VectorXd prod =
                ((d.beta.col(i).array() - exact.mean(i)) * (d.beta.col(j).array() - exact.mean(j))).matrix();
            worst = std::max(worst, std::abs(prod.mean() - exact.cov(i, j)) / oracle::batch_means_se(prod));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("gibbs_beta_conditional limits") {
    const Eigen::MatrixXd x = testing::gaussian_matrix(30, 2, 1);
    const Eigen::VectorXd y = x * Eigen::Vector2d(1.0, -2.0) + 0.1 * testing::gaussian_matrix(30, 1, 2);
    const auto flat = gibbs_beta_conditional(x, y, 1.0, make_prior(2, 1e12), {1});
    const Eigen::VectorXd ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    CHECK((flat.mean - ols).norm() < 1e-8);

    NigPrior prior = make_prior(2, 1.0);
    prior.beta0 = Eigen::Vector2d(0.3, -0.7);
    prior.sigma0 << 2.0, 0.5, 0.5, 1.0;
    const auto nodata = gibbs_beta_conditional(Eigen::MatrixXd::Zero(5, 2), y.head(5), 2.0, prior, {3});
    CHECK((nodata.mean - prior.beta0).norm() < 1e-14);
    CHECK((nodata.cov - 2.0 * prior.sigma0).norm() < 1e-13);
}

TEST_CASE("gibbs_beta_conditional matches dense algebra") {
    Eigen::MatrixXd x(4, 2);
    x << 1.0, 0.5, -0.3, 2.0, 0.8, -1.1, 1.7, 0.2;
    const Eigen::Vector4d y(1.2, -0.4, 0.9, 2.2);
    NigPrior prior = make_prior(2, 1.0, 2.0, 1.5);
    prior.beta0 = Eigen::Vector2d(0.1, 0.2);
    prior.sigma0 << 1.5, 0.3, 0.3, 0.8;
    const int r = 3;
    const double sigma2 = 0.7;
    const Eigen::MatrixXd s0inv = prior.sigma0.inverse();
    const Eigen::MatrixXd sb = (s0inv + r * x.transpose() * x).inverse();
    const Eigen::VectorXd mu = sb * (s0inv * prior.beta0 + r * x.transpose() * y);
    const auto got = gibbs_beta_conditional(x, y, sigma2, prior, {r});
    CHECK((got.mean - mu).norm() < 1e-12);
    CHECK((got.cov - sigma2 * sb).norm() < 1e-12);

    // Larger R shrinks the conditional covariance.
    double last = INFINITY;
    for (int rr : {1, 2, 5, 10}) {
        const double tr = gibbs_beta_conditional(x, y, sigma2, prior, {rr}).cov.trace();
        CHECK(tr < last);
        last = tr;
    }
    CHECK_THROWS_AS(gibbs_beta_conditional(x, y, 0.0, prior, {1}), ConfigError);
    CHECK_THROWS_AS(gibbs_beta_conditional(x, y.head(3), 1.0, prior, {1}), ConfigError);
    NigPrior singular = prior;
    singular.sigma0 << 1, 1, 1, 1;
    CHECK_THROWS_AS(singular.validate(), ConfigError);
}

TEST_CASE("gibbs_sigma2_conditional") {
    Eigen::MatrixXd x(3, 1);
    x << 1.0, 2.0, -1.0;
    NigPrior prior = make_prior(1, 2.0, 1.5, 0.5);
    prior.beta0(0) = 0.4;
    const Eigen::Vector3d exact_y = x * 0.4;
    const auto zero = gibbs_sigma2_conditional(x, exact_y, prior.beta0, prior, {2});
    CHECK(zero.shape == 1.5 + (2 * 3 + 1) / 2.0);
    CHECK(zero.rate == doctest::Approx(0.5).epsilon(1e-15));

    // Hand evaluation: e = y - x beta, b' = b + R/2 e'e + (beta - beta0)^2 / (2 s0).
    const Eigen::Vector3d y(1.0, 3.0, 0.5);
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 1.2);
    const double e0 = 1.0 - 1.2, e1 = 3.0 - 2.4, e2 = 0.5 + 1.2;
    const double hand = 0.5 + 2.0 / 2.0 * (e0 * e0 + e1 * e1 + e2 * e2) + (1.2 - 0.4) * (1.2 - 0.4) / (2.0 * 2.0);
    CHECK(gibbs_sigma2_conditional(x, y, beta, prior, {2}).rate == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("sample_posterior basic properties") {
    const Eigen::MatrixXd x = testing::gaussian_matrix(2000, 2, 3);
    const Eigen::VectorXd y = x * Eigen::Vector2d(0.5, 1.5) + 0.8 * testing::gaussian_matrix(2000, 1, 4);
    const ModelSpec m = ModelSpec::parse("11");
    McmcConfig mc;
    mc.seed = 17;
    const auto a = sample_posterior(x, y, m, make_prior(2, 100.0, 0.01, 0.01), {1}, mc);
    const auto b = sample_posterior(x, y, m, make_prior(2, 100.0, 0.01, 0.01), {1}, mc);
    CHECK(a.beta == b.beta);
    CHECK(a.sigma2 == b.sigma2);
    CHECK(a.count() == 500);
    CHECK((a.sigma2.array() > 0.0).all());
    const Eigen::VectorXd ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    const double resid_var = (y - x * ols).squaredNorm() / (2000 - 2);
    CHECK(a.sigma2.mean() == doctest::Approx(resid_var).epsilon(0.1));

    // Noiseless data with a tight prior at the truth.
    const Eigen::VectorXd clean = x * Eigen::Vector2d(0.5, 1.5);
    NigPrior tight = make_prior(2, 1e-6);
    tight.beta0 = Eigen::Vector2d(0.5, 1.5);
    const auto c = sample_posterior(x, clean, m, tight, {1}, mc);
    CHECK((c.beta.colwise().mean().transpose() - Eigen::Vector2d(0.5, 1.5)).norm() < 1e-3);

    McmcConfig bad;
    bad.burn_in = 1000;
    CHECK_THROWS_AS(sample_posterior(x, y, m, make_prior(2, 1.0), {1}, bad), ConfigError);
    CHECK_THROWS_AS(sample_posterior(x, y, m, make_prior(3, 1.0), {1}, mc), ConfigError);
    CHECK_THROWS_AS(PowerLikelihoodConfig{0}.validate(), ConfigError);
}

TEST_CASE("Gibbs moments match the closed-form power posterior") {
    const Eigen::MatrixXd x = testing::gaussian_matrix(50, 2, 21);
    const Eigen::VectorXd y = x * Eigen::Vector2d(1.0, -0.5) + testing::gaussian_matrix(50, 1, 22);
    NigPrior prior = make_prior(2, 4.0, 2.0, 1.0);
    prior.beta0 = Eigen::Vector2d(0.2, 0.1);
    McmcConfig mc;
    mc.iterations = 41000;
    mc.burn_in = 1000;
    mc.seed = 5;
    for (int r : {1, 3}) {
        const auto draws = sample_posterior(x, y, ModelSpec::parse("11"), prior, {r}, mc);
        const auto exact = oracle::nig_moments(x, y, prior.a, prior.b, prior.beta0, prior.sigma0, r);
        CHECK(worst_z(draws, exact) < 3.0);
        // Library closed form against the oracle.
        const auto post = exact_posterior(GramStats::from(x, y), prior, {r});
        CHECK((post.mean - exact.mean).norm() < 1e-12);
        CHECK((post.beta_covariance() - exact.cov).norm() < 1e-12);
    }
}

TEST_CASE("log_marginal_likelihood matches quadrature") {
    Eigen::VectorXd x(3), y(3);
    x << 0.5, -1.0, 1.5;
    y << 0.7, -1.4, 2.1;
    const NigPrior prior = make_prior(1, 1.0, 1.0, 1.0);
    for (int r : {1, 2, 5}) {
        const double got = log_marginal_likelihood(Eigen::MatrixXd(x), y, prior, {r});
        const double quad = oracle::quadrature_log_marginal(x, y, 1.0, 1.0, 0.0, 1.0, r);
        CHECK(std::abs(std::expm1(got - quad)) < 1e-4);
    }
    // Near point-mass prior on beta.
    NigPrior point = make_prior(1, 1e-6, 2.0, 1.0);
    point.beta0(0) = 1.3;
    const double got = log_marginal_likelihood(Eigen::MatrixXd(x), y, point, {1});
    const double quad = oracle::quadrature_log_marginal(x, y, 2.0, 1.0, 1.3, 1e-6, 1);
    CHECK(std::abs(std::expm1(got - quad)) < 1e-4);
}

TEST_CASE("log_marginal_likelihood routes agree and rows are exchangeable") {
    const Eigen::MatrixXd x = testing::gaussian_matrix(40, 3, 8);
    const Eigen::VectorXd y = x * Eigen::Vector3d(1, 0, -1) + testing::gaussian_matrix(40, 1, 9);
    NigPrior prior = make_prior(3, 10.0, 1.5, 2.0);
    prior.beta0 = Eigen::Vector3d(0.1, -0.2, 0.3);
    for (int r : {1, 3, 10}) {
        const double dense = log_marginal_likelihood(x, y, prior, {r}, MarginalRoute::dense);
        const double wood = log_marginal_likelihood(x, y, prior, {r}, MarginalRoute::woodbury);
        CHECK(dense == doctest::Approx(wood).epsilon(1e-10));
        CHECK(log_marginal_likelihood(GramStats::from(x, y), prior, {r}) == wood);
    }
    std::vector<Eigen::Index> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[3], perm[17]);
    const Eigen::MatrixXd xp = x(perm, Eigen::all);
    const Eigen::VectorXd yp = y(perm);
    for (auto route : {MarginalRoute::dense, MarginalRoute::woodbury})
        CHECK(std::abs(log_marginal_likelihood(x, y, prior, {2}, route) - log_marginal_likelihood(xp, yp, prior, {2}, route)) <
              1e-10);
    // s < p forces the dense route.
    const Eigen::MatrixXd wide = testing::gaussian_matrix(2, 3, 10);
    CHECK(std::isfinite(log_marginal_likelihood(wide, y.head(2), prior, {1})));
}

TEST_CASE("mle_fit") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    const Eigen::Vector3d y(2, 4, 7);
    const auto fit = mle_fit(x, y);
    CHECK(fit.beta_hat(0) == doctest::Approx(31.0 / 14.0).epsilon(1e-14));
    const double rss = (y - x * (31.0 / 14.0)).squaredNorm();
    CHECK(fit.sigma2_hat == doctest::Approx(rss / 3.0).epsilon(1e-14));
    CHECK(fit.max_loglik == doctest::Approx(-1.5 * std::log(2 * M_PI * rss / 3.0) - 1.5).epsilon(1e-14));
    const auto from_stats = mle_fit(GramStats::from(x, y));
    CHECK(from_stats.beta_hat(0) == doctest::Approx(fit.beta_hat(0)).epsilon(1e-12));
    CHECK(from_stats.max_loglik == doctest::Approx(fit.max_loglik).epsilon(1e-10));

    const auto perfect = mle_fit(x, Eigen::Vector3d(2, 4, 6));
    CHECK(perfect.sigma2_hat == kSigma2Floor);
    CHECK(perfect.max_loglik > 30.0);

    Eigen::MatrixXd dup(4, 3);
    dup << 1, 2, 1, 2, 1, 2, 3, 5, 3, 4, 0, 4;
    try {
        mle_fit(dup, Eigen::Vector4d(1, 2, 3, 4));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("dependent columns") != std::string::npos);
    }
    CHECK_THROWS_AS(mle_fit(testing::gaussian_matrix(2, 3, 1), Eigen::Vector2d(1, 2)), DataError);

    const Eigen::MatrixXd xr = testing::gaussian_matrix(60, 4, 12);
    const Eigen::VectorXd yr = testing::gaussian_matrix(60, 1, 13);
    const auto f = mle_fit(xr, yr);
    CHECK((xr.transpose() * (yr - xr * f.beta_hat)).cwiseAbs().maxCoeff() < 1e-8 * yr.norm());
}

TEST_CASE("predictive_draws") {
    NigPosteriorDraws d;
    d.beta = testing::gaussian_matrix(5, 2, 30);
    d.sigma2 = Eigen::VectorXd::Zero(5);
    d.seed = 1;
    const Eigen::MatrixXd xn = testing::gaussian_matrix(3, 2, 31);
    CHECK((predictive_draws(d, xn) - d.beta * xn.transpose()).cwiseAbs().maxCoeff() == 0.0);

    NigPosteriorDraws single;
    single.beta = Eigen::RowVector2d(1.0, -2.0);
    single.sigma2 = Eigen::VectorXd::Constant(1, 0.25);
    single.seed = 4;
    const Eigen::MatrixXd out = predictive_draws(single, Eigen::Matrix2d::Identity());
    CHECK(out.rows() == 1);
    CHECK(out.cols() == 2);
    CHECK(std::abs(out(0, 0) - 1.0) < 5 * 0.5);
    CHECK(predictive_draws(single, Eigen::Matrix2d::Identity()) == out);
    CHECK_THROWS_AS(predictive_draws(single, Eigen::Matrix3d::Identity()), ConfigError);

    // Predictive mean vs x_new times posterior mean, within 3 Monte Carlo SE.
    const Eigen::MatrixXd x = testing::gaussian_matrix(100, 2, 32);
    const Eigen::VectorXd y = x * Eigen::Vector2d(2, 1) + testing::gaussian_matrix(100, 1, 33);
    McmcConfig mc;
    mc.iterations = 20500;
    mc.burn_in = 500;
    mc.seed = 9;
    const auto draws = sample_posterior(x, y, ModelSpec::parse("11"), make_prior(2, 10.0), {1}, mc);
    const Eigen::RowVector2d xnew(0.7, -1.2);
    const Eigen::MatrixXd pred = predictive_draws(draws, xnew);
    const double expected = xnew.dot(draws.beta.colwise().mean());
    const Eigen::VectorXd col = pred.col(0);
    CHECK(std::abs(col.mean() - expected) < 3.0 * oracle::batch_means_se(col));
}
