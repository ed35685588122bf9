#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "medpost/conjugate.hpp"
#include "medpost/rng.hpp"

namespace medpost {

struct SpikeSlabPrior {
    double nu0 = 0.005;
    double a = 0.01;
    double b = 0.01;
    double a_tau = 5.0;
    double b_tau = 50.0;

    void validate() const;
};

/// One Gibbs state. `j` holds the scale multipliers J_d in {nu0, 1}.
struct SpikeSlabState {
    Eigen::VectorXd beta;
    double sigma2_inv = 1.0;
    Eigen::VectorXd j;
    Eigen::VectorXd tau2;
    double w = 0.5;

    /// Throws NumericError if any invariant is broken.
    void check(double nu0) const;
    bool in_slab(Eigen::Index d) const { return j(d) == 1.0; }
};

enum class ScaleBasis { per_subset, global };

struct RescaledResponse {
    Eigen::VectorXd y_prime;
    double sigma_hat2 = 0.0;
    double n_basis = 0.0;
    ScaleBasis scale_basis = ScaleBasis::per_subset;

    /// sqrt(n_basis / sigma_hat2), the factor applied to y.
    double factor() const { return std::sqrt(n_basis / sigma_hat2); }
};

/// Y' = sqrt(R s / sigma_hat2) Y. With per_subset the variance estimate is
/// the unbiased full-model OLS value RSS / (s - p) on this subset.
RescaledResponse rescale_response(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, ScaleBasis basis,
                                  const PowerLikelihoodConfig& cfg,
                                  std::optional<double> global_sigma_hat2 = std::nullopt);

/// beta | rest ~ N(mean, cov) with cov = (Delta^-1 + (R/N) sigma^-2 X'X)^-1 and
/// mean = cov (R/N) sigma^-2 X'y', Delta = diag(J_d tau_d^2), N = R s.
NormalConditional ss_beta_conditional(const SpikeSlabState& state, const GramStats& stats,
                                      const PowerLikelihoodConfig& cfg);
/// sigma^-2 | beta ~ Gamma(a + N/2, b + R/(2N) |y' - X beta|^2).
GammaParams ss_sigma2_inv_conditional(const Eigen::VectorXd& beta, const GramStats& stats, const SpikeSlabPrior& prior,
                                      const PowerLikelihoodConfig& cfg);
/// Beta parameters of w | J: (1 + #slab, 1 + #spike).
std::pair<double, double> ss_w_conditional(const Eigen::VectorXd& j);

/// One sweep: beta, sigma^-2, each J_d, each tau_d^-2, then w. N = R s.
SpikeSlabState ss_gibbs_step(const SpikeSlabState& state, const Eigen::MatrixXd& x, const Eigen::VectorXd& y_prime,
                             const SpikeSlabPrior& prior, const PowerLikelihoodConfig& cfg, Rng& rng);
/// Same sweep from precomputed statistics of (x, y_prime).
SpikeSlabState ss_gibbs_step(const SpikeSlabState& state, const GramStats& stats, const SpikeSlabPrior& prior,
                             const PowerLikelihoodConfig& cfg, Rng& rng);

/// Probability that J_d = nu0 given beta_d, tau2_d and w, computed in log space.
double spike_probability(double beta_d, double tau2_d, double w, double nu0);

struct SpikeSlabChain {
    std::vector<SpikeSlabState> states;  // retained sweeps
    Eigen::VectorXd inclusion_freq;      // fraction of retained states with J_d = 1
    RescaledResponse rescaled;
};

/// Rescales the response, starts from the ridge solution in the slab and runs
/// mcmc.iterations sweeps, keeping those after burn-in.
SpikeSlabChain ss_run_chain(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SpikeSlabPrior& prior,
                            const PowerLikelihoodConfig& cfg, const McmcConfig& mcmc,
                            ScaleBasis basis = ScaleBasis::per_subset,
                            std::optional<double> global_sigma_hat2 = std::nullopt);

/// Predictor d selected iff inclusion_freq[d] >= 1/2.
ModelSpec ss_median_model(const Eigen::VectorXd& inclusion_freq);

}  // namespace medpost
