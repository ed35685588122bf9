#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "medpost/criteria.hpp"

namespace medpost {

enum class Method { bma, aic, bic, median_prob, spike_slab };
enum class Strategy { model_combination, estimate_combination };

std::string to_string(Method m);
std::string to_string(Strategy s);
Method parse_method(const std::string& name);
Strategy parse_strategy(const std::string& name);

/// Everything one subset contributes to aggregation. Per-model containers
/// are indexed like the model universe; coefficient vectors are in design
/// coordinates (intercept first when configured).
struct SubsetSummary {
    int subset_id = 0;
    Eigen::Index rows = 0;

    Eigen::VectorXd log_marginals;
    CriterionVector probs;
    CriterionVector aic;
    CriterionVector bic;
    std::vector<std::string> model_errors;  // per model, empty when the fit succeeded
    std::optional<Eigen::VectorXd> ss_inclusion;

    Eigen::MatrixXd pred_mean;                  // K x n_test
    Eigen::MatrixXd pred_var;                   // K x n_test
    std::vector<Eigen::MatrixXd> pred_quantiles;  // K tables of Q x n_test, or empty
    std::vector<Eigen::VectorXd> beta_mean;
    std::vector<Eigen::MatrixXd> beta_cov;
    std::vector<Eigen::MatrixXd> beta_quantiles;  // K tables of Q x p_k, or empty

    double seconds = 0.0;

    bool has_predictions() const noexcept { return pred_mean.size() > 0 || !beta_mean.empty(); }
    bool has_pred_quantiles() const noexcept { return !pred_quantiles.empty(); }
    bool has_coef_quantiles() const noexcept { return !beta_quantiles.empty(); }
};

struct AggregateResult {
    Method method = Method::bma;
    Strategy strategy = Strategy::model_combination;

    Eigen::VectorXd star_probs;             // aggregated posterior model probabilities
    /// Model combination: the aggregated criterion the winner was read from
    /// (probabilities, AIC_R or BIC_R medians, inclusion probabilities or
    /// frequencies). Estimate combination: share of subsets choosing each model.
    Eigen::VectorXd criterion;
    Eigen::MatrixXd per_model_predictions;  // K x n_test
    Eigen::VectorXd final_prediction;
    Eigen::MatrixXd predictive_quantiles;   // Q x n_test, empty unless requested

    std::optional<ModelSpec> chosen_model;  // model combination only
    std::size_t selected_index = 0;         // winner, or the most common local choice
    ModelSpec selected_model;
    std::vector<std::size_t> local_choices;

    Eigen::VectorXd coef_mean;       // selected model, design coordinates
    Eigen::MatrixXd coef_quantiles;  // Q x p, empty unless requested
};

}  // namespace medpost
