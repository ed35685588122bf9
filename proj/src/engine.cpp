#include "medpost/engine.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "medpost/errors.hpp"
#include "medpost/quantiles.hpp"
#include "medpost/rng.hpp"

namespace medpost {

void PipelineConfig::validate() const {
    if (r < 1) throw ConfigError("PipelineConfig: r must be at least 1");
    if (parallelism < 1) throw ConfigError("PipelineConfig: parallelism must be at least 1");
    if (effective_r_power() < 1) throw ConfigError("PipelineConfig: r_power must be at least 1");
    if (!(prior_scale > 0.0)) throw ConfigError("PipelineConfig: prior_scale must be positive");
    if (!(prior_a > 0.0) || !(prior_b > 0.0)) throw ConfigError("PipelineConfig: prior_a and prior_b must be positive");
    mcmc.validate();
    if (prior) prior->validate();
    if (needs_spike_slab()) ss_prior.validate();
    weiszfeld.validate();
    if (predictive_quantiles && !predictions)
        throw ConfigError("PipelineConfig: predictive quantiles need predictions enabled");
    if (coef_quantiles && !predictions) throw ConfigError("PipelineConfig: coefficient quantiles need predictions enabled");
}

NigPrior PipelineConfig::resolved_prior(Eigen::Index design_cols) const {
    if (prior) {
        if (prior->dim() != design_cols)
            throw ConfigError("PipelineConfig: prior has dimension " + std::to_string(prior->dim()) + ", design has " +
                              std::to_string(design_cols) + " columns");
        return *prior;
    }
    return NigPrior::isotropic(design_cols, prior_scale, prior_a, prior_b);
}

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& x, bool intercept) {
    if (!intercept) return x;
    Eigen::MatrixXd z(x.rows(), x.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(x.cols()) = x;
    return z;
}

std::vector<Eigen::Index> design_columns(const ModelSpec& m, bool intercept) {
    std::vector<Eigen::Index> cols;
    if (intercept) cols.push_back(0);
    const Eigen::Index offset = intercept ? 1 : 0;
    for (const auto d : m.indices()) cols.push_back(static_cast<Eigen::Index>(d) + offset);
    return cols;
}

std::size_t effective_parallelism(std::size_t requested) {
    std::size_t n = std::max<std::size_t>(requested, 1);
    if (const char* env = std::getenv("MEDPOST_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
    }
    return n;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body,
                  const char* label) {
    std::vector<std::exception_ptr> errors(n);
    auto run_one = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    threads = std::min(std::max<std::size_t>(threads, 1), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_one(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i]) continue;
        const std::string prefix = std::string(label) + " " + std::to_string(i) + ": ";
        try {
            std::rethrow_exception(errors[i]);
        } catch (const ConfigError& e) {
            throw ConfigError(prefix + e.what());
        } catch (const DataError& e) {
            throw DataError(prefix + e.what());
        } catch (const NumericError& e) {
            throw NumericError(prefix + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(prefix + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error(prefix + e.what());
        }
    }
}

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(cols[c]);
    return out;
}

}  // namespace

SubsetSummary run_subset(const Eigen::MatrixXd& x_sub, const Eigen::VectorXd& y_sub, const Eigen::MatrixXd& x_test,
                         const ModelUniverse& universe, const PipelineConfig& cfg, int subset_id,
                         std::optional<double> global_sigma_hat2) {
    const auto start = std::chrono::steady_clock::now();
    if (y_sub.size() == 0) throw ConfigError("run_subset: empty subset");
    if (x_sub.rows() != y_sub.size()) throw ConfigError("run_subset: x and y row counts differ");
    if (x_sub.cols() != static_cast<Eigen::Index>(universe.predictor_count()))
        throw ConfigError("run_subset: predictor count differs from the model universe");
    if (cfg.predictions && x_test.cols() != x_sub.cols())
        throw ConfigError("run_subset: test design has " + std::to_string(x_test.cols()) + " columns, expected " +
                          std::to_string(x_sub.cols()));

    const Eigen::MatrixXd z = design_matrix(x_sub, cfg.intercept);
    const GramStats full = GramStats::from(z, y_sub);
    const NigPrior prior_full = cfg.resolved_prior(z.cols());
    const PowerLikelihoodConfig pl{cfg.effective_r_power()};
    const double n_eff = static_cast<double>(pl.r_power) * static_cast<double>(y_sub.size());
    const auto k_count = static_cast<Eigen::Index>(universe.size());
    const auto& levels = default_quantile_levels();

    SubsetSummary out;
    out.subset_id = subset_id;
    out.rows = y_sub.size();
    out.log_marginals.resize(k_count);
    Eigen::VectorXd aic(k_count), bic(k_count);
    out.model_errors.assign(universe.size(), {});

    Eigen::MatrixXd z_test;
    if (cfg.predictions) {
        z_test = design_matrix(x_test, cfg.intercept);
        out.pred_mean.resize(k_count, x_test.rows());
        out.pred_var.resize(k_count, x_test.rows());
        out.beta_mean.resize(universe.size());
        out.beta_cov.resize(universe.size());
        if (cfg.predictive_quantiles) out.pred_quantiles.resize(universe.size());
        if (cfg.coef_quantiles) out.beta_quantiles.resize(universe.size());
    }

    for (Eigen::Index k = 0; k < k_count; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const ModelSpec& model = universe.models[ku];
        const auto cols = design_columns(model, cfg.intercept);
        const GramStats stats = full.restrict(cols);
        const NigPrior prior = prior_full.restrict(cols);

        if (stats.n < stats.dim())
            out.log_marginals(k) = log_marginal_likelihood(select_columns(z, cols), y_sub, prior, pl, MarginalRoute::dense);
        else
            out.log_marginals(k) = log_marginal_likelihood(stats, prior, pl);

        try {
            const MleFit fit = mle_fit(stats);
            aic(k) = aic_r(fit.max_loglik, cols.size(), pl.r_power);
            bic(k) = bic_r(fit.max_loglik, cols.size(), n_eff, pl.r_power);
        } catch (const DataError& e) {
            aic(k) = bic(k) = std::numeric_limits<double>::infinity();
            out.model_errors[ku] = e.what();
        }

        if (!cfg.predictions) continue;
        McmcConfig mc = cfg.mcmc;
        mc.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(subset_id), static_cast<std::uint64_t>(k),
                              SeedPurpose::mcmc);
        const NigPosteriorDraws draws = sample_posterior(stats, model, prior, pl, mc);
        const Eigen::VectorXd bmean = draws.beta.colwise().mean().transpose();
        Eigen::MatrixXd bcov = Eigen::MatrixXd::Zero(bmean.size(), bmean.size());
        if (draws.count() > 1) {
            const Eigen::MatrixXd centered = draws.beta.rowwise() - bmean.transpose();
            bcov = centered.transpose() * centered / static_cast<double>(draws.count() - 1);
        }
        const Eigen::MatrixXd zt = select_columns(z_test, cols);
        const double sigma2_mean = draws.sigma2.mean();
        if (zt.cols() > 0) {
            out.pred_mean.row(k) = (zt * bmean).transpose();
            out.pred_var.row(k) = ((zt * bcov).cwiseProduct(zt).rowwise().sum().array() + sigma2_mean).transpose();
        } else {
            out.pred_mean.row(k).setZero();
            out.pred_var.row(k).setConstant(sigma2_mean);
        }
        if (cfg.predictive_quantiles) out.pred_quantiles[ku] = column_quantiles(predictive_draws(draws, zt), levels);
        if (cfg.coef_quantiles) out.beta_quantiles[ku] = column_quantiles(draws.beta, levels);
        out.beta_mean[ku] = bmean;
        out.beta_cov[ku] = std::move(bcov);
    }

    if ((aic.array() == std::numeric_limits<double>::infinity()).all())
        throw DataError("run_subset: no model admits a maximum-likelihood fit; first failure: " + out.model_errors.front());
    out.probs = posterior_model_probs(out.log_marginals, universe, subset_id);
    out.aic = {CriterionKind::aic, std::move(aic), subset_id};
    out.bic = {CriterionKind::bic, std::move(bic), subset_id};

    if (cfg.needs_spike_slab()) {
        McmcConfig mc = cfg.mcmc;
        mc.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(subset_id), 0, SeedPurpose::spike_slab);
        Eigen::MatrixXd xs = x_sub;
        Eigen::VectorXd ys = y_sub;
        if (cfg.intercept) {
            xs.rowwise() -= xs.colwise().mean();
            ys.array() -= ys.mean();
        }
        out.ss_inclusion = ss_run_chain(xs, ys, cfg.ss_prior, pl, mc, cfg.ss_basis, global_sigma_hat2).inclusion_freq;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

double full_model_sigma_hat2(const Dataset& train, bool intercept) {
    const Eigen::MatrixXd z = design_matrix(train.x(), intercept);
    if (z.rows() <= z.cols()) throw DataError("full_model_sigma_hat2: not enough rows for the full model");
    const MleFit fit = mle_fit(z, train.y());
    const double rss = (train.y() - z * fit.beta_hat).squaredNorm();
    return rss / static_cast<double>(z.rows() - z.cols());
}

SubsetRun compute_subset_summaries(const Dataset& train, const Eigen::MatrixXd& x_test, const PipelineConfig& cfg) {
    cfg.validate();
    SubsetRun run;
    run.universe = enumerate_universe(static_cast<std::size_t>(train.d()), cfg.universe);
    run.partition = partition(train, cfg.r, derive_seed(cfg.master_seed, 0, 0, SeedPurpose::partition));
    std::optional<double> global;
    if (cfg.needs_spike_slab() && cfg.ss_basis == ScaleBasis::global) global = full_model_sigma_hat2(train, cfg.intercept);

    run.summaries.resize(cfg.r);
    parallel_for(cfg.r, effective_parallelism(std::min(cfg.parallelism, cfg.r)), [&](std::size_t j) {
        const auto& rows = run.partition.members[j];
        const Eigen::MatrixXd xs = train.x()(rows, Eigen::all);
        const Eigen::VectorXd ys = train.y()(rows);
        run.summaries[j] = run_subset(xs, ys, x_test, run.universe, cfg, static_cast<int>(j), global);
    });
    return run;
}

AggregateResult run_pipeline(const Dataset& train, const Eigen::MatrixXd& x_test, const PipelineConfig& cfg) {
    const SubsetRun run = compute_subset_summaries(train, x_test, cfg);
    return combine(cfg.strategy, run.summaries, run.universe, cfg.method, cfg.weiszfeld);
}

AggregateResult run_single_machine(const Dataset& train, const Eigen::MatrixXd& x_test, const PipelineConfig& cfg) {
    PipelineConfig whole = cfg;
    whole.r = 1;
    if (!whole.r_power) whole.r_power = 1;
    whole.validate();
    const ModelUniverse universe = enumerate_universe(static_cast<std::size_t>(train.d()), whole.universe);
    std::optional<double> global;
    if (whole.needs_spike_slab() && whole.ss_basis == ScaleBasis::global)
        global = full_model_sigma_hat2(train, whole.intercept);
    const SubsetSummary summary = run_subset(train.x(), train.y(), x_test, universe, whole, 0, global);
    return select_single_machine(summary, universe, whole.method, whole.strategy);
}

}  // namespace medpost
