#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "medpost/combine.hpp"
#include "medpost/conjugate.hpp"
#include "medpost/dataset.hpp"
#include "medpost/spikeslab.hpp"

namespace medpost {

struct PipelineConfig {
    Method method = Method::bma;
    Strategy strategy = Strategy::model_combination;
    std::size_t r = 1;
    /// Likelihood exponent; defaults to r. Setting 1 turns the power adjustment off.
    std::optional<int> r_power;
    McmcConfig mcmc;  // the seed field is ignored; chains are seeded from master_seed
    /// Prior over design columns (intercept first). Left empty, an isotropic
    /// prior with scale prior_scale and hyperparameters prior_a, prior_b is used.
    std::optional<NigPrior> prior;
    double prior_scale = 100.0;
    double prior_a = 1.0;
    double prior_b = 1.0;
    SpikeSlabPrior ss_prior;
    ScaleBasis ss_basis = ScaleBasis::per_subset;
    UniverseSpec universe;
    bool intercept = false;
    std::uint64_t master_seed = 0;
    std::size_t parallelism = 1;

    bool predictions = true;            // Gibbs draws and per-model predictions
    bool predictive_quantiles = false;  // Q-grid predictive quantiles per model
    bool coef_quantiles = false;        // Q-grid coefficient quantiles per model
    bool spike_slab_chain = false;      // run the chain even when method != spike_slab
    WeiszfeldConfig weiszfeld;

    void validate() const;
    int effective_r_power() const { return r_power ? *r_power : static_cast<int>(r); }
    bool needs_spike_slab() const { return spike_slab_chain || method == Method::spike_slab; }
    NigPrior resolved_prior(Eigen::Index design_cols) const;
};

/// Prepends a column of ones when `intercept` is set.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& x, bool intercept);

/// Column indices of model m inside the design built by design_matrix.
std::vector<Eigen::Index> design_columns(const ModelSpec& m, bool intercept);

/// Worker count after applying the MEDPOST_THREADS cap.
std::size_t effective_parallelism(std::size_t requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Every index runs
/// even if some fail; afterwards the failure with the lowest index is
/// rethrown, prefixed with `label` and the index, keeping its error category.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body,
                  const char* label = "subset");

/// Per-subset inference (Algorithm 1 loop body): log marginals, MLE-based
/// AIC_R/BIC_R, Gibbs draws per model and their predictive summaries, and
/// optionally the spike-and-slab chain. x_sub and x_test hold predictors only.
SubsetSummary run_subset(const Eigen::MatrixXd& x_sub, const Eigen::VectorXd& y_sub, const Eigen::MatrixXd& x_test,
                         const ModelUniverse& universe, const PipelineConfig& cfg, int subset_id,
                         std::optional<double> global_sigma_hat2 = std::nullopt);

struct SubsetRun {
    Partition partition;
    ModelUniverse universe;
    std::vector<SubsetSummary> summaries;  // ordered by subset id
};

/// Partition plus parallel run_subset; aggregation is left to the caller.
SubsetRun compute_subset_summaries(const Dataset& train, const Eigen::MatrixXd& x_test, const PipelineConfig& cfg);

AggregateResult run_pipeline(const Dataset& train, const Eigen::MatrixXd& x_test, const PipelineConfig& cfg);

/// Whole-data analysis without partitioning or aggregation.
AggregateResult run_single_machine(const Dataset& train, const Eigen::MatrixXd& x_test, const PipelineConfig& cfg);

/// Unbiased full-model residual variance on all of `train`.
double full_model_sigma_hat2(const Dataset& train, bool intercept);

}  // namespace medpost
