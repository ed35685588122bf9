#include "medpost/conjugate.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "medpost/errors.hpp"
#include "medpost/rng.hpp"

namespace medpost {

NigPrior NigPrior::isotropic(Eigen::Index p, double scale, double a, double b) {
    NigPrior prior{a, b, Eigen::VectorXd::Zero(p), scale * Eigen::MatrixXd::Identity(p, p)};
    prior.validate();
    return prior;
}

NigPrior NigPrior::restrict(std::span<const Eigen::Index> cols) const {
    const auto p = static_cast<Eigen::Index>(cols.size());
    NigPrior out{a, b, Eigen::VectorXd(p), Eigen::MatrixXd(p, p)};
    for (Eigen::Index i = 0; i < p; ++i) {
        out.beta0(i) = beta0(cols[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < p; ++j)
            out.sigma0(i, j) = sigma0(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
    }
    return out;
}

void NigPrior::validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("NigPrior: a and b must be positive");
    if (sigma0.rows() != beta0.size() || sigma0.cols() != beta0.size())
        throw ConfigError("NigPrior: sigma0 must be p x p with p = len(beta0)");
    if (beta0.size() == 0) return;
    if (!((sigma0 - sigma0.transpose()).cwiseAbs().maxCoeff() <= 1e-10))
        throw ConfigError("NigPrior: sigma0 is not symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(sigma0).info() != Eigen::Success)
        throw ConfigError("NigPrior: sigma0 is not positive definite");
}

void PowerLikelihoodConfig::validate() const {
    if (r_power < 1) throw ConfigError("PowerLikelihoodConfig: r_power must be >= 1");
}

void McmcConfig::validate() const {
    if (iterations < 1) throw ConfigError("McmcConfig: iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) throw ConfigError("McmcConfig: need 0 <= burn_in < iterations");
    if (thin < 1) throw ConfigError("McmcConfig: thin must be >= 1");
}

GramStats GramStats::from(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw ConfigError("GramStats: x and y row counts differ");
    GramStats s;
    s.xtx = Eigen::MatrixXd(x.cols(), x.cols());
    s.xtx.setZero();
    s.xtx.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    s.xtx = s.xtx.selfadjointView<Eigen::Lower>();
    s.xty = x.transpose() * y;
    s.yty = y.squaredNorm();
    s.n = x.rows();
    return s;
}

GramStats GramStats::restrict(std::span<const Eigen::Index> cols) const {
    const auto p = static_cast<Eigen::Index>(cols.size());
    GramStats out;
    out.xtx.resize(p, p);
    out.xty.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const auto ci = cols[static_cast<std::size_t>(i)];
        out.xty(i) = xty(ci);
        for (Eigen::Index j = 0; j < p; ++j) out.xtx(i, j) = xtx(ci, cols[static_cast<std::size_t>(j)]);
    }
    out.yty = yty;
    out.n = n;
    return out;
}

namespace {

void check_prior_dim(const NigPrior& prior, Eigen::Index p, const char* where) {
    if (prior.dim() != p)
        throw ConfigError(std::string(where) + ": prior dimension " + std::to_string(prior.dim()) +
                          " does not match design with " + std::to_string(p) + " columns");
}

Eigen::MatrixXd prior_precision(const NigPrior& prior) {
    const auto p = prior.dim();
    if (p == 0) return Eigen::MatrixXd(0, 0);
    Eigen::LLT<Eigen::MatrixXd> llt(prior.sigma0);
    if (llt.info() != Eigen::Success) throw ConfigError("NigPrior: sigma0 is singular");
    return llt.solve(Eigen::MatrixXd::Identity(p, p));
}

/// Pieces shared by the Gibbs sampler, the exact posterior and the marginal.
struct PosteriorCore {
    Eigen::MatrixXd prior_prec;
    Eigen::LLT<Eigen::MatrixXd> prec_llt;  // of Sigma0^-1 + R X'X
    Eigen::VectorXd mean;
};

PosteriorCore posterior_core(const GramStats& stats, const NigPrior& prior, double r) {
    PosteriorCore core;
    core.prior_prec = prior_precision(prior);
    const auto p = stats.dim();
    if (p == 0) {
        core.mean = Eigen::VectorXd(0);
        return core;
    }
    const Eigen::MatrixXd prec = core.prior_prec + r * stats.xtx;
    core.prec_llt.compute(prec);
    if (core.prec_llt.info() != Eigen::Success)
        throw NumericError("posterior precision is not positive definite");
    core.mean = core.prec_llt.solve(core.prior_prec * prior.beta0 + r * stats.xty);
    return core;
}

double residual_ss(const GramStats& stats, const Eigen::VectorXd& beta) {
    if (beta.size() == 0) return stats.yty;
    const double rss = stats.yty - 2.0 * beta.dot(stats.xty) + beta.dot(stats.xtx * beta);
    return rss > 0.0 ? rss : 0.0;
}

}  // namespace

NormalConditional gibbs_beta_conditional(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma2,
                                         const NigPrior& prior, const PowerLikelihoodConfig& cfg) {
    cfg.validate();
    if (!(sigma2 > 0.0)) throw ConfigError("gibbs_beta_conditional: sigma2 must be positive");
    if (x.rows() != y.size()) throw ConfigError("gibbs_beta_conditional: x and y row counts differ");
    check_prior_dim(prior, x.cols(), "gibbs_beta_conditional");
    const auto core = posterior_core(GramStats::from(x, y), prior, cfg.r_power);
    const auto p = x.cols();
    Eigen::MatrixXd sigma_beta = p == 0 ? Eigen::MatrixXd(0, 0) : core.prec_llt.solve(Eigen::MatrixXd::Identity(p, p));
    return {core.mean, sigma2 * sigma_beta};
}

GammaParams gibbs_sigma2_conditional(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& beta, const NigPrior& prior,
                                     const PowerLikelihoodConfig& cfg) {
    cfg.validate();
    if (x.rows() != y.size() || x.cols() != beta.size())
        throw ConfigError("gibbs_sigma2_conditional: non-conformable shapes");
    check_prior_dim(prior, x.cols(), "gibbs_sigma2_conditional");
    const double r = cfg.r_power;
    const Eigen::VectorXd resid = y - x * beta;
    double quad = 0.0;
    if (beta.size() > 0) {
        const Eigen::VectorXd dev = beta - prior.beta0;
        quad = dev.dot(prior_precision(prior) * dev);
    }
    const double shape = prior.a + (r * static_cast<double>(x.rows()) + static_cast<double>(x.cols())) / 2.0;
    const double rate = prior.b + 0.5 * r * resid.squaredNorm() + 0.5 * quad;
    return {shape, rate};
}

NigPosteriorDraws sample_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ModelSpec& model,
                                   const NigPrior& prior, const PowerLikelihoodConfig& cfg,
                                   const McmcConfig& mcmc) {
    if (x.rows() != y.size()) throw ConfigError("sample_posterior: x and y row counts differ");
    return sample_posterior(GramStats::from(x, y), model, prior, cfg, mcmc);
}

NigPosteriorDraws sample_posterior(const GramStats& stats, const ModelSpec& model, const NigPrior& prior,
                                   const PowerLikelihoodConfig& cfg, const McmcConfig& mcmc) {
    cfg.validate();
    mcmc.validate();
    check_prior_dim(prior, stats.dim(), "sample_posterior");
    if (stats.n < 1) throw ConfigError("sample_posterior: empty subset");

    const auto p = stats.dim();
    const double r = cfg.r_power;
    const auto core = posterior_core(stats, prior, r);
    const double shape = prior.a + (r * static_cast<double>(stats.n) + static_cast<double>(p)) / 2.0;

    NigPosteriorDraws out;
    out.model = model;
    out.seed = mcmc.seed;
    out.beta.resize(mcmc.kept(), p);
    out.sigma2.resize(mcmc.kept());

    Rng rng(mcmc.seed);
    Eigen::VectorXd beta = core.mean;
    Eigen::VectorXd z(p);
    Eigen::Index kept = 0;
    for (int t = 0; t < mcmc.iterations; ++t) {
        double quad = 0.0;
        if (p > 0) {
            const Eigen::VectorXd dev = beta - prior.beta0;
            quad = dev.dot(core.prior_prec * dev);
        }
        const double rate = prior.b + 0.5 * r * residual_ss(stats, beta) + 0.5 * quad;
        const double sigma2 = 1.0 / rng.gamma(shape, rate);

        if (p > 0) {
            for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
            // prec = L L', so L'^-1 z has covariance prec^-1 = Sigma_beta.
            beta = core.mean + std::sqrt(sigma2) * core.prec_llt.matrixU().solve(z);
        }
        if (t >= mcmc.burn_in && (t - mcmc.burn_in) % mcmc.thin == 0) {
            out.beta.row(kept) = beta.transpose();
            out.sigma2(kept) = sigma2;
            ++kept;
        }
    }
    return out;
}

ExactPosterior exact_posterior(const GramStats& stats, const NigPrior& prior, const PowerLikelihoodConfig& cfg) {
    cfg.validate();
    check_prior_dim(prior, stats.dim(), "exact_posterior");
    const double r = cfg.r_power;
    const auto core = posterior_core(stats, prior, r);
    const auto p = stats.dim();
    ExactPosterior post;
    post.mean = core.mean;
    post.sigma_beta = p == 0 ? Eigen::MatrixXd(0, 0) : core.prec_llt.solve(Eigen::MatrixXd::Identity(p, p));
    post.shape = prior.a + r * static_cast<double>(stats.n) / 2.0;
    // b + 1/2 [R e'e + (mu - beta0)' Sigma0^-1 (mu - beta0)] evaluated at the posterior mean.
    double quad = 0.0;
    if (p > 0) {
        const Eigen::VectorXd dev = core.mean - prior.beta0;
        quad = dev.dot(core.prior_prec * dev);
    }
    post.rate = prior.b + 0.5 * (r * residual_ss(stats, core.mean) + quad);
    return post;
}

NigPosteriorDraws sample_exact(const GramStats& stats, const ModelSpec& model, const NigPrior& prior,
                               const PowerLikelihoodConfig& cfg, int count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("sample_exact: count must be positive");
    const auto post = exact_posterior(stats, prior, cfg);
    const auto p = stats.dim();
    NigPosteriorDraws out;
    out.model = model;
    out.seed = seed;
    out.beta.resize(count, p);
    out.sigma2.resize(count);
    Eigen::MatrixXd chol;
    if (p > 0) chol = Eigen::LLT<Eigen::MatrixXd>(post.sigma_beta).matrixL();
    Rng rng(seed);
    Eigen::VectorXd z(p);
    for (int t = 0; t < count; ++t) {
        const double sigma2 = 1.0 / rng.gamma(post.shape, post.rate);
        for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
        if (p > 0) out.beta.row(t) = (post.mean + std::sqrt(sigma2) * chol * z).transpose();
        out.sigma2(t) = sigma2;
    }
    return out;
}

namespace {

double log_marginal_from_quadratic(double log_det_sigma_x, double quad, double n_eff, const NigPrior& prior,
                                   double r) {
    const double shape = prior.a + n_eff / 2.0;
    return 0.5 * n_eff * std::log(r / (2.0 * std::numbers::pi)) + prior.a * std::log(prior.b) +
           std::lgamma(shape) - std::lgamma(prior.a) - 0.5 * log_det_sigma_x -
           shape * std::log(prior.b + 0.5 * r * quad);
}

}  // namespace

double log_marginal_likelihood(const GramStats& stats, const NigPrior& prior, const PowerLikelihoodConfig& cfg) {
    cfg.validate();
    check_prior_dim(prior, stats.dim(), "log_marginal_likelihood");
    if (stats.n < 1) throw ConfigError("log_marginal_likelihood: empty subset");
    const double r = cfg.r_power;
    const double n_eff = r * static_cast<double>(stats.n);
    const auto p = stats.dim();
    if (p == 0) return log_marginal_from_quadratic(0.0, stats.yty, n_eff, prior, r);

    // Determinant lemma: |I + R X S0 X'| = |S0| |S0^-1 + R X'X|.
    Eigen::LLT<Eigen::MatrixXd> s0_llt(prior.sigma0);
    if (s0_llt.info() != Eigen::Success) throw ConfigError("NigPrior: sigma0 is singular");
    const Eigen::MatrixXd prior_prec = s0_llt.solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::LLT<Eigen::MatrixXd> prec_llt(prior_prec + r * stats.xtx);
    if (prec_llt.info() != Eigen::Success) throw NumericError("log_marginal_likelihood: Cholesky failed");
    const double log_det = 2.0 * Eigen::VectorXd(s0_llt.matrixL().toDenseMatrix().diagonal()).array().log().sum() +
                           2.0 * Eigen::VectorXd(prec_llt.matrixL().toDenseMatrix().diagonal()).array().log().sum();

    // Woodbury: q' (I + R X S0 X')^-1 q = q'q - R (X'q)' (S0^-1 + R X'X)^-1 (X'q), q = y - X beta0.
    const Eigen::VectorXd xtq = stats.xty - stats.xtx * prior.beta0;
    const double qtq = stats.yty - 2.0 * prior.beta0.dot(stats.xty) + prior.beta0.dot(stats.xtx * prior.beta0);
    double quad = qtq - r * xtq.dot(prec_llt.solve(xtq));
    if (quad < 0.0) quad = 0.0;
    return log_marginal_from_quadratic(log_det, quad, n_eff, prior, r);
}

double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NigPrior& prior,
                               const PowerLikelihoodConfig& cfg, MarginalRoute route) {
    cfg.validate();
    if (x.rows() != y.size()) throw ConfigError("log_marginal_likelihood: x and y row counts differ");
    check_prior_dim(prior, x.cols(), "log_marginal_likelihood");
    if (x.rows() < 1) throw ConfigError("log_marginal_likelihood: empty subset");
    if (route == MarginalRoute::automatic)
        route = x.rows() < x.cols() ? MarginalRoute::dense : MarginalRoute::woodbury;
    if (route == MarginalRoute::woodbury) return log_marginal_likelihood(GramStats::from(x, y), prior, cfg);

    const double r = cfg.r_power;
    const auto s = x.rows();
    Eigen::MatrixXd sigma_x = Eigen::MatrixXd::Identity(s, s);
    Eigen::VectorXd q = y;
    if (x.cols() > 0) {
        sigma_x.noalias() += r * x * prior.sigma0 * x.transpose();
        q -= x * prior.beta0;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_x);
    if (llt.info() != Eigen::Success)
        throw NumericError("log_marginal_likelihood: I + R X Sigma0 X' is not positive definite");
    const Eigen::MatrixXd lower = llt.matrixL();
    const double log_det = 2.0 * lower.diagonal().array().log().sum();
    const Eigen::VectorXd w = llt.matrixL().solve(q);
    return log_marginal_from_quadratic(log_det, w.squaredNorm(), r * static_cast<double>(s), prior, r);
}

namespace {

double gaussian_loglik(double rss, double sigma2, Eigen::Index n) {
    const double s = static_cast<double>(n);
    return -0.5 * s * std::log(2.0 * std::numbers::pi * sigma2) - rss / (2.0 * sigma2);
}

}  // namespace

MleFit mle_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw ConfigError("mle_fit: x and y row counts differ");
    if (x.cols() > x.rows())
        throw DataError("mle_fit: " + std::to_string(x.cols()) + " predictors but only " +
                        std::to_string(x.rows()) + " rows");
    MleFit fit;
    if (x.cols() == 0) {
        fit.beta_hat = Eigen::VectorXd(0);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        qr.setThreshold(1e-10);
        if (qr.rank() < x.cols()) {
            std::string cols;
            for (Eigen::Index i = qr.rank(); i < x.cols(); ++i)
                cols += (cols.empty() ? "" : ",") + std::to_string(qr.colsPermutation().indices()(i));
            throw DataError("mle_fit: rank-deficient design; dependent columns {" + cols + "}");
        }
        fit.beta_hat = qr.solve(y);
    }
    const double rss = x.cols() == 0 ? y.squaredNorm() : (y - x * fit.beta_hat).squaredNorm();
    fit.sigma2_hat = std::max(rss / static_cast<double>(x.rows()), kSigma2Floor);
    fit.max_loglik = gaussian_loglik(rss, fit.sigma2_hat, x.rows());
    return fit;
}

MleFit mle_fit(const GramStats& stats) {
    const auto p = stats.dim();
    if (p > stats.n)
        throw DataError("mle_fit: " + std::to_string(p) + " predictors but only " + std::to_string(stats.n) +
                        " rows");
    MleFit fit;
    if (p == 0) {
        fit.beta_hat = Eigen::VectorXd(0);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stats.xtx);
        qr.setThreshold(1e-12);
        if (qr.rank() < p) {
            std::string cols;
            for (Eigen::Index i = qr.rank(); i < p; ++i)
                cols += (cols.empty() ? "" : ",") + std::to_string(qr.colsPermutation().indices()(i));
            throw DataError("mle_fit: rank-deficient design; dependent columns {" + cols + "}");
        }
        fit.beta_hat = qr.solve(stats.xty);
    }
    const double rss = residual_ss(stats, fit.beta_hat);
    fit.sigma2_hat = std::max(rss / static_cast<double>(stats.n), kSigma2Floor);
    fit.max_loglik = gaussian_loglik(rss, fit.sigma2_hat, stats.n);
    return fit;
}

Eigen::MatrixXd predictive_draws(const NigPosteriorDraws& draws, const Eigen::MatrixXd& x_new) {
    if (x_new.cols() != draws.beta.cols())
        throw ConfigError("predictive_draws: x_new has " + std::to_string(x_new.cols()) +
                          " columns, draws have " + std::to_string(draws.beta.cols()));
    Rng rng(splitmix64(draws.seed ^ static_cast<std::uint64_t>(SeedPurpose::predictive)));
    Eigen::MatrixXd out(draws.count(), x_new.rows());
    if (x_new.cols() > 0)
        out.noalias() = draws.beta * x_new.transpose();
    else
        out.setZero();
    for (Eigen::Index t = 0; t < draws.count(); ++t) {
        const double sd = std::sqrt(draws.sigma2(t));
        for (Eigen::Index i = 0; i < x_new.rows(); ++i) out(t, i) += sd * rng.normal();
    }
    return out;
}

}  // namespace medpost
