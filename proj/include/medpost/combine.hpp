#pragma once

#include <vector>

#include "medpost/geomedian.hpp"
#include "medpost/summary.hpp"

namespace medpost {

/// The model a single subset picks under `method`: max posterior probability
/// (bma), min AIC_R / BIC_R, the median-probability model, or the
/// spike-and-slab median model. Masks outside the universe are mapped to the
/// nearest member.
std::size_t local_choice(const SubsetSummary& s, const ModelUniverse& universe, Method method);

/// Geometric median over subsets of every model's prediction vector (K x n_test).
Eigen::MatrixXd aggregate_per_model_predictions(const std::vector<SubsetSummary>& summaries,
                                                const WeiszfeldConfig& cfg = {});

/// Aggregates subset summaries. `per_model_cache`, when given, must be the
/// output of aggregate_per_model_predictions on the same summaries.
AggregateResult combine(Strategy strategy, const std::vector<SubsetSummary>& summaries,
                        const ModelUniverse& universe, Method method, const WeiszfeldConfig& cfg = {},
                        const Eigen::MatrixXd* per_model_cache = nullptr);

/// Selection and prediction from one whole-data summary, with no aggregation
/// step at all. combine() on a single summary must agree with this exactly.
AggregateResult select_single_machine(const SubsetSummary& summary, const ModelUniverse& universe, Method method,
                                      Strategy strategy);

/// Weight below which a model is left out of mixture quantiles, relative to
/// the largest weight.
inline constexpr double kMixtureWeightCutoff = 1e-12;

}  // namespace medpost
