#include "medpost/spikeslab.hpp"

#include <cmath>
#include <string>

#include "medpost/errors.hpp"

namespace medpost {

void SpikeSlabPrior::validate() const {
    if (!(nu0 > 0.0 && nu0 < 1.0)) throw ConfigError("SpikeSlabPrior: nu0 must lie in (0, 1)");
    if (!(a > 0.0 && b > 0.0 && a_tau > 0.0 && b_tau > 0.0))
        throw ConfigError("SpikeSlabPrior: hyperparameters must be positive");
}

void SpikeSlabState::check(double nu0) const {
    if (!(sigma2_inv > 0.0) || !std::isfinite(sigma2_inv)) throw NumericError("spike-slab state: sigma^-2 invalid");
    if (!(w >= 0.0 && w <= 1.0)) throw NumericError("spike-slab state: w outside [0, 1]");
    for (Eigen::Index d = 0; d < j.size(); ++d) {
        if (j(d) != nu0 && j(d) != 1.0) throw NumericError("spike-slab state: J_d not in {nu0, 1}");
        if (!(tau2(d) > 0.0) || !std::isfinite(tau2(d))) throw NumericError("spike-slab state: tau2 invalid");
    }
    if (!beta.allFinite()) throw NumericError("spike-slab state: non-finite beta");
}

RescaledResponse rescale_response(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, ScaleBasis basis,
                                  const PowerLikelihoodConfig& cfg, std::optional<double> global_sigma_hat2) {
    cfg.validate();
    if (x.rows() != y.size()) throw ConfigError("rescale_response: x and y row counts differ");
    const auto s = x.rows();
    const auto p = x.cols();
    RescaledResponse out;
    out.scale_basis = basis;
    out.n_basis = static_cast<double>(cfg.r_power) * static_cast<double>(s);
    if (basis == ScaleBasis::global) {
        if (!global_sigma_hat2) throw ConfigError("rescale_response: global basis needs a variance estimate");
        out.sigma_hat2 = *global_sigma_hat2;
    } else if (s > p) {
        Eigen::VectorXd resid = y;
        bool full_rank = true;
        if (p > 0) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
            full_rank = qr.rank() == p;
            if (full_rank) resid -= x * qr.solve(y);
        }
        if (full_rank)
            out.sigma_hat2 = resid.squaredNorm() / static_cast<double>(s - p);
        else if (global_sigma_hat2)
            out.sigma_hat2 = *global_sigma_hat2;
        else
            throw DataError("rescale_response: full-model design is rank deficient");
    } else if (global_sigma_hat2) {
        out.sigma_hat2 = *global_sigma_hat2;
    } else {
        throw DataError("rescale_response: " + std::to_string(s) + " rows cannot fit the " + std::to_string(p) +
                        "-predictor full model and no global variance was supplied");
    }
    if (!(out.sigma_hat2 > 0.0) || !std::isfinite(out.sigma_hat2))
        throw DataError("rescale_response: variance estimate is not positive");
    out.y_prime = out.factor() * y;
    return out;
}

double spike_probability(double beta_d, double tau2_d, double w, double nu0) {
    if (w <= 0.0) return 1.0;
    if (w >= 1.0) return 0.0;
    const double b2 = beta_d * beta_d / tau2_d;
    const double log_spike = std::log1p(-w) - 0.5 * std::log(nu0) - b2 / (2.0 * nu0);
    const double log_slab = std::log(w) - b2 / 2.0;
    // 1 / (1 + exp(log_slab - log_spike)) without overflow.
    const double diff = log_slab - log_spike;
    if (diff > 0.0) {
        const double e = std::exp(-diff);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(diff));
}

NormalConditional ss_beta_conditional(const SpikeSlabState& state, const GramStats& stats,
                                      const PowerLikelihoodConfig& cfg) {
    const auto p = stats.dim();
    const double r = cfg.r_power;
    const double c = r / (r * static_cast<double>(stats.n)) * state.sigma2_inv;
    Eigen::MatrixXd prec = c * stats.xtx;
    prec.diagonal() += (state.j.array() * state.tau2.array()).inverse().matrix();
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
        throw NumericError("ss_gibbs_step: beta precision is not positive definite (sigma^-2=" +
                           std::to_string(state.sigma2_inv) + ", min tau2=" + std::to_string(state.tau2.minCoeff()) +
                           ")");
    return {llt.solve(c * stats.xty), llt.solve(Eigen::MatrixXd::Identity(p, p))};
}

GammaParams ss_sigma2_inv_conditional(const Eigen::VectorXd& beta, const GramStats& stats, const SpikeSlabPrior& prior,
                                      const PowerLikelihoodConfig& cfg) {
    const double r = cfg.r_power;
    const double n_eff = r * static_cast<double>(stats.n);
    double rss = stats.yty;
    if (beta.size() > 0) rss += -2.0 * beta.dot(stats.xty) + beta.dot(stats.xtx * beta);
    if (rss < 0.0) rss = 0.0;
    return {prior.a + n_eff / 2.0, prior.b + r / (2.0 * n_eff) * rss};
}

std::pair<double, double> ss_w_conditional(const Eigen::VectorXd& j) {
    const auto slab = static_cast<double>((j.array() == 1.0).count());
    return {1.0 + slab, 1.0 + (static_cast<double>(j.size()) - slab)};
}

SpikeSlabState ss_gibbs_step(const SpikeSlabState& state, const GramStats& stats, const SpikeSlabPrior& prior,
                             const PowerLikelihoodConfig& cfg, Rng& rng) {
    const auto p = stats.dim();
    if (state.beta.size() != p || state.j.size() != p || state.tau2.size() != p)
        throw ConfigError("ss_gibbs_step: state dimension does not match the design");
    SpikeSlabState next = state;

    if (p > 0) {
        const NormalConditional cond = ss_beta_conditional(state, stats, cfg);
        Eigen::VectorXd z(p);
        for (Eigen::Index d = 0; d < p; ++d) z(d) = rng.normal();
        next.beta = cond.mean + Eigen::LLT<Eigen::MatrixXd>(cond.cov).matrixL() * z;
    }

    const GammaParams g = ss_sigma2_inv_conditional(next.beta, stats, prior, cfg);
    next.sigma2_inv = rng.gamma(g.shape, g.rate);

    for (Eigen::Index d = 0; d < p; ++d) {
        const double ps = spike_probability(next.beta(d), state.tau2(d), state.w, prior.nu0);
        next.j(d) = rng.uniform() < ps ? prior.nu0 : 1.0;
    }
    for (Eigen::Index d = 0; d < p; ++d) {
        const double b = next.beta(d);
        next.tau2(d) = 1.0 / rng.gamma(prior.a_tau + 0.5, prior.b_tau + b * b / (2.0 * next.j(d)));
    }
    const auto [wa, wb] = ss_w_conditional(next.j);
    next.w = rng.beta(wa, wb);
    next.check(prior.nu0);
    return next;
}

SpikeSlabState ss_gibbs_step(const SpikeSlabState& state, const Eigen::MatrixXd& x, const Eigen::VectorXd& y_prime,
                             const SpikeSlabPrior& prior, const PowerLikelihoodConfig& cfg, Rng& rng) {
    prior.validate();
    cfg.validate();
    state.check(prior.nu0);
    if (x.rows() != y_prime.size()) throw ConfigError("ss_gibbs_step: x and y row counts differ");
    return ss_gibbs_step(state, GramStats::from(x, y_prime), prior, cfg, rng);
}

SpikeSlabChain ss_run_chain(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SpikeSlabPrior& prior,
                            const PowerLikelihoodConfig& cfg, const McmcConfig& mcmc, ScaleBasis basis,
                            std::optional<double> global_sigma_hat2) {
    prior.validate();
    cfg.validate();
    mcmc.validate();
    SpikeSlabChain chain;
    chain.rescaled = rescale_response(x, y, basis, cfg, global_sigma_hat2);
    const GramStats stats = GramStats::from(x, chain.rescaled.y_prime);
    const auto p = stats.dim();

    SpikeSlabState state;
    Eigen::MatrixXd ridge = stats.xtx;
    ridge.diagonal().array() += 1e-6;
    state.beta = p > 0 ? Eigen::VectorXd(ridge.ldlt().solve(stats.xty)) : Eigen::VectorXd(0);
    state.sigma2_inv = 1.0;  // the rescaled response has unit noise variance by construction
    state.j = Eigen::VectorXd::Ones(p);
    state.tau2 = Eigen::VectorXd::Ones(p);
    state.w = 0.5;

    Rng rng(mcmc.seed);
    chain.states.reserve(static_cast<std::size_t>(mcmc.kept()));
    Eigen::VectorXd slab_counts = Eigen::VectorXd::Zero(p);
    for (int t = 0; t < mcmc.iterations; ++t) {
        state = ss_gibbs_step(state, stats, prior, cfg, rng);
        if (t >= mcmc.burn_in && (t - mcmc.burn_in) % mcmc.thin == 0) {
            for (Eigen::Index d = 0; d < p; ++d)
                if (state.in_slab(d)) slab_counts(d) += 1.0;
            chain.states.push_back(state);
        }
    }
    chain.inclusion_freq = slab_counts / static_cast<double>(chain.states.size());
    return chain;
}

ModelSpec ss_median_model(const Eigen::VectorXd& inclusion_freq) {
    std::vector<bool> mask(static_cast<std::size_t>(inclusion_freq.size()));
    for (Eigen::Index d = 0; d < inclusion_freq.size(); ++d) mask[static_cast<std::size_t>(d)] = inclusion_freq(d) >= 0.5;
    return ModelSpec(std::move(mask));
}

}  // namespace medpost
