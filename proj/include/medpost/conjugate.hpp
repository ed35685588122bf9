#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "medpost/criteria.hpp"

namespace medpost {

/// Normal-Inverse-Gamma prior: sigma^-2 ~ Gamma(a, b) (shape, rate) and
/// beta | sigma^2 ~ N(beta0, sigma^2 sigma0).
struct NigPrior {
    double a = 1.0;
    double b = 1.0;
    Eigen::VectorXd beta0;
    Eigen::MatrixXd sigma0;

    static NigPrior isotropic(Eigen::Index p, double scale, double a = 1.0, double b = 1.0);

    Eigen::Index dim() const noexcept { return beta0.size(); }
    /// Sub-prior over the listed coordinates.
    NigPrior restrict(std::span<const Eigen::Index> cols) const;
    void validate() const;
};

/// Exponent R applied to a subset likelihood.
struct PowerLikelihoodConfig {
    int r_power = 1;
    void validate() const;
};

struct McmcConfig {
    int iterations = 1000;
    int burn_in = 500;
    int thin = 1;
    std::uint64_t seed = 0;

    void validate() const;
    int kept() const { return (iterations - burn_in + thin - 1) / thin; }
};

/// Sufficient statistics of a regression design. Every sampler and marginal
/// computation below needs only these, so a subset's data is touched once.
struct GramStats {
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
    double yty = 0.0;
    Eigen::Index n = 0;

    static GramStats from(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
    GramStats restrict(std::span<const Eigen::Index> cols) const;
    Eigen::Index dim() const noexcept { return xty.size(); }
};

struct NormalConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

struct GammaParams {
    double shape = 0.0;
    double rate = 0.0;
};

/// beta | sigma^2 ~ N(mu, sigma^2 Sigma_beta) with
/// Sigma_beta = (Sigma0^-1 + R X'X)^-1 and mu = Sigma_beta (Sigma0^-1 beta0 + R X'y).
NormalConditional gibbs_beta_conditional(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma2,
                                         const NigPrior& prior, const PowerLikelihoodConfig& cfg);

/// sigma^-2 | beta ~ Gamma(a + (R s + p)/2, b + R/2 e'e + 1/2 (beta-beta0)' Sigma0^-1 (beta-beta0)).
GammaParams gibbs_sigma2_conditional(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& beta, const NigPrior& prior,
                                     const PowerLikelihoodConfig& cfg);

struct NigPosteriorDraws {
    Eigen::MatrixXd beta;    // T x p
    Eigen::VectorXd sigma2;  // T
    ModelSpec model;
    std::uint64_t seed = 0;

    Eigen::Index count() const noexcept { return sigma2.size(); }
};

/// Two-block Gibbs sampler for the power posterior. Columns of x are the
/// model's design (intercept included if the caller wants one).
NigPosteriorDraws sample_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ModelSpec& model,
                                   const NigPrior& prior, const PowerLikelihoodConfig& cfg,
                                   const McmcConfig& mcmc);
NigPosteriorDraws sample_posterior(const GramStats& stats, const ModelSpec& model, const NigPrior& prior,
                                   const PowerLikelihoodConfig& cfg, const McmcConfig& mcmc);

/// Closed-form power posterior: beta | sigma^2 ~ N(mean, sigma^2 sigma_beta),
/// sigma^-2 ~ Gamma(shape, rate).
struct ExactPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd sigma_beta;
    double shape = 0.0;
    double rate = 0.0;

    /// Marginal posterior covariance of beta (multivariate t).
    Eigen::MatrixXd beta_covariance() const { return rate / (shape - 1.0) * sigma_beta; }
};

ExactPosterior exact_posterior(const GramStats& stats, const NigPrior& prior, const PowerLikelihoodConfig& cfg);

/// iid draws from the closed-form posterior (no Markov chain).
NigPosteriorDraws sample_exact(const GramStats& stats, const ModelSpec& model, const NigPrior& prior,
                               const PowerLikelihoodConfig& cfg, int count, std::uint64_t seed);

enum class MarginalRoute { automatic, dense, woodbury };

/// log Pr(Y | X) under the power likelihood with N = R s. The dense route
/// factors the s x s matrix I + R X Sigma0 X'; the Woodbury route works in
/// the p x p system and is what `automatic` picks unless s < p.
double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NigPrior& prior,
                               const PowerLikelihoodConfig& cfg, MarginalRoute route = MarginalRoute::automatic);
double log_marginal_likelihood(const GramStats& stats, const NigPrior& prior, const PowerLikelihoodConfig& cfg);

inline constexpr double kSigma2Floor = 1e-12;

struct MleFit {
    Eigen::VectorXd beta_hat;
    double sigma2_hat = 0.0;
    double max_loglik = 0.0;
};

/// OLS fit, variance RSS / s (floored at kSigma2Floor), Gaussian log-likelihood
/// at the maximum. Throws DataError on rank deficiency or p > s.
MleFit mle_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
MleFit mle_fit(const GramStats& stats);

/// y_t = x_new beta_t + N(0, sigma2_t) for each retained draw; T x n_new.
Eigen::MatrixXd predictive_draws(const NigPosteriorDraws& draws, const Eigen::MatrixXd& x_new);

}  // namespace medpost
