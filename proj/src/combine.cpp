#include "medpost/combine.hpp"

#include <functional>
#include <span>
#include <string>

#include "medpost/errors.hpp"
#include "medpost/quantiles.hpp"
#include "medpost/spikeslab.hpp"

namespace medpost {

std::string to_string(Method m) {
    switch (m) {
        case Method::bma: return "bma";
        case Method::aic: return "aic";
        case Method::bic: return "bic";
        case Method::median_prob: return "median_prob";
        case Method::spike_slab: return "spike_slab";
    }
    return "unknown";
}

std::string to_string(Strategy s) {
    return s == Strategy::model_combination ? "model_combination" : "estimate_combination";
}

Method parse_method(const std::string& name) {
    if (name == "bma") return Method::bma;
    if (name == "aic") return Method::aic;
    if (name == "bic") return Method::bic;
    if (name == "median_prob" || name == "median") return Method::median_prob;
    if (name == "spike_slab") return Method::spike_slab;
    throw ConfigError("unknown method '" + name + "' (expected bma, aic, bic, median_prob, spike_slab)");
}

Strategy parse_strategy(const std::string& name) {
    if (name == "model_combination" || name == "model") return Strategy::model_combination;
    if (name == "estimate_combination" || name == "estimate") return Strategy::estimate_combination;
    throw ConfigError("unknown strategy '" + name + "' (expected model_combination or estimate_combination)");
}

std::size_t local_choice(const SubsetSummary& s, const ModelUniverse& universe, Method method) {
    switch (method) {
        case Method::bma: return best_model(s.probs.values, universe, true);
        case Method::aic: return best_model(s.aic.values, universe, false);
        case Method::bic: return best_model(s.bic.values, universe, false);
        case Method::median_prob:
            return universe.nearest(median_probability_model(inclusion_probs(s.probs, universe)));
        case Method::spike_slab:
            if (!s.ss_inclusion) throw ConfigError("local_choice: subset has no spike-and-slab chain");
            return universe.nearest(ss_median_model(*s.ss_inclusion));
    }
    throw ConfigError("local_choice: unknown method");
}

namespace {

Eigen::VectorXd mix_predictions(const Eigen::VectorXd& weights, const Eigen::MatrixXd& preds) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(preds.cols());
    for (Eigen::Index k = 0; k < weights.size(); ++k)
        if (weights(k) != 0.0) out += weights(k) * preds.row(k).transpose();
    return out;
}

Eigen::VectorXd trimmed_weights(const Eigen::VectorXd& w) {
    const double cut = kMixtureWeightCutoff * w.maxCoeff();
    return w.unaryExpr([cut](double v) { return v < cut ? 0.0 : v; });
}

/// Mixture of per-model predictive quantile tables, one test point at a time.
template <typename TableFor>
Eigen::MatrixXd mix_quantile_tables(const Eigen::VectorXd& weights, TableFor&& table_for, Eigen::Index q,
                                    Eigen::Index n_test) {
    const auto& levels = default_quantile_levels();
    if (q != levels.size()) throw ConfigError("mixture quantiles need the default quantile grid");
    std::vector<Eigen::Index> active;
    for (Eigen::Index k = 0; k < weights.size(); ++k)
        if (weights(k) > 0.0) active.push_back(k);
    std::vector<Eigen::MatrixXd> tables;
    tables.reserve(active.size());
    for (const auto k : active) tables.push_back(table_for(k));
    Eigen::VectorXd w(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) w(static_cast<Eigen::Index>(a)) = weights(active[a]);

    Eigen::MatrixXd out(q, n_test);
    Eigen::MatrixXd comps(q, static_cast<Eigen::Index>(active.size()));
    for (Eigen::Index i = 0; i < n_test; ++i) {
        for (std::size_t a = 0; a < tables.size(); ++a) comps.col(static_cast<Eigen::Index>(a)) = tables[a].col(i);
        out.col(i) = mixture_quantiles(comps, w, levels);
    }
    return out;
}

std::size_t modal_choice(const std::vector<std::size_t>& choices, const ModelUniverse& universe) {
    std::vector<std::size_t> counts(universe.size(), 0);
    for (const auto c : choices) ++counts[c];
    std::size_t best = choices.front();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] > counts[best] ||
            (counts[k] == counts[best] && counts[k] > 0 && tie_break_prefers(universe.models[k], universe.models[best])))
            best = k;
    }
    return best;
}

Eigen::VectorXd choice_shares(const std::vector<std::size_t>& choices, std::size_t k) {
    Eigen::VectorXd shares = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (const auto c : choices) shares(static_cast<Eigen::Index>(c)) += 1.0;
    return shares / static_cast<double>(choices.size());
}

void check_summaries(std::span<const SubsetSummary> summaries, const ModelUniverse& universe) {
    if (summaries.empty()) throw ConfigError("combine: no subset summaries");
    const auto k = static_cast<Eigen::Index>(universe.size());
    const auto& first = summaries.front();
    for (const auto& s : summaries) {
        if (s.probs.values.size() != k || s.aic.values.size() != k || s.bic.values.size() != k)
            throw ConfigError("combine: subset " + std::to_string(s.subset_id) + " disagrees with the universe");
        if (s.has_predictions() != first.has_predictions() || s.pred_mean.cols() != first.pred_mean.cols())
            throw ConfigError("combine: subset " + std::to_string(s.subset_id) + " has a different test grid");
        if (s.has_predictions() && s.pred_mean.rows() != k)
            throw ConfigError("combine: subset " + std::to_string(s.subset_id) + " prediction rows differ from K");
    }
}

Eigen::MatrixXd stack_rows(const std::vector<SubsetSummary>& summaries,
                           const std::function<Eigen::VectorXd(const SubsetSummary&)>& row) {
    Eigen::MatrixXd out;
    for (std::size_t j = 0; j < summaries.size(); ++j) {
        const Eigen::VectorXd v = row(summaries[j]);
        if (j == 0) out.resize(static_cast<Eigen::Index>(summaries.size()), v.size());
        out.row(static_cast<Eigen::Index>(j)) = v.transpose();
    }
    return out;
}

bool all_have_pred_quantiles(const std::vector<SubsetSummary>& summaries) {
    for (const auto& s : summaries)
        if (!s.has_pred_quantiles()) return false;
    return true;
}

bool all_have_coef_quantiles(const std::vector<SubsetSummary>& summaries) {
    for (const auto& s : summaries)
        if (!s.has_coef_quantiles()) return false;
    return true;
}

}  // namespace

Eigen::MatrixXd aggregate_per_model_predictions(const std::vector<SubsetSummary>& summaries,
                                                const WeiszfeldConfig& cfg) {
    if (summaries.empty()) throw ConfigError("aggregate_per_model_predictions: no summaries");
    const auto k = summaries.front().pred_mean.rows();
    const auto n = summaries.front().pred_mean.cols();
    Eigen::MatrixXd out(k, n);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(summaries.size()), n);
    for (Eigen::Index m = 0; m < k; ++m) {
        for (std::size_t j = 0; j < summaries.size(); ++j)
            rows.row(static_cast<Eigen::Index>(j)) = summaries[j].pred_mean.row(m);
        out.row(m) = aggregate_predictions(rows, cfg).transpose();
    }
    return out;
}

AggregateResult combine(Strategy strategy, const std::vector<SubsetSummary>& summaries,
                        const ModelUniverse& universe, Method method, const WeiszfeldConfig& cfg,
                        const Eigen::MatrixXd* per_model_cache) {
    check_summaries(summaries, universe);
    const bool with_preds = summaries.front().has_predictions();
    const bool with_pq = with_preds && all_have_pred_quantiles(summaries);
    const auto n_test = summaries.front().pred_mean.cols();
    const auto q = with_pq ? summaries.front().pred_quantiles.front().rows() : 0;

    AggregateResult res;
    res.method = method;
    res.strategy = strategy;
    res.star_probs = aggregate_model_probs(stack_rows(summaries, [](const SubsetSummary& s) { return s.probs.values; }), cfg);
    for (const auto& s : summaries) res.local_choices.push_back(local_choice(s, universe, method));
    if (with_preds)
        res.per_model_predictions = per_model_cache ? *per_model_cache : aggregate_per_model_predictions(summaries, cfg);

    auto aggregate_tables = [&](auto&& table_of) {
        std::vector<Eigen::MatrixXd> tables;
        tables.reserve(summaries.size());
        for (const auto& s : summaries) tables.push_back(table_of(s));
        return aggregate_quantile_vectors(tables, cfg);
    };

    if (strategy == Strategy::model_combination) {
        std::size_t winner = 0;
        switch (method) {
            case Method::bma:
                res.criterion = res.star_probs;
                winner = best_model(res.star_probs, universe, true);
                break;
            case Method::aic:
                res.criterion = componentwise_median(stack_rows(summaries, [](const SubsetSummary& s) { return s.aic.values; }));
                winner = best_model(res.criterion, universe, false);
                break;
            case Method::bic:
                res.criterion = componentwise_median(stack_rows(summaries, [](const SubsetSummary& s) { return s.bic.values; }));
                winner = best_model(res.criterion, universe, false);
                break;
            case Method::median_prob:
                res.criterion = inclusion_probs({CriterionKind::posterior_prob, res.star_probs, 0}, universe).p;
                winner = universe.nearest(median_probability_model({res.criterion}));
                break;
            case Method::spike_slab:
                res.criterion = componentwise_median(stack_rows(summaries, [](const SubsetSummary& s) {
                    if (!s.ss_inclusion) throw ConfigError("combine: subset has no spike-and-slab chain");
                    return *s.ss_inclusion;
                }));
                winner = universe.nearest(ss_median_model(res.criterion));
                break;
        }
        res.selected_index = winner;
        res.chosen_model = universe.models[winner];
        if (with_preds) {
            if (method == Method::bma) {
                res.final_prediction = mix_predictions(res.star_probs, res.per_model_predictions);
                if (with_pq) {
                    res.predictive_quantiles = mix_quantile_tables(
                        trimmed_weights(res.star_probs),
                        [&](Eigen::Index k) {
                            return aggregate_tables([k](const SubsetSummary& s) { return s.pred_quantiles[static_cast<std::size_t>(k)]; });
                        },
                        q, n_test);
                }
            } else {
                res.final_prediction = res.per_model_predictions.row(static_cast<Eigen::Index>(winner)).transpose();
                if (with_pq)
                    res.predictive_quantiles = aggregate_tables([winner](const SubsetSummary& s) { return s.pred_quantiles[winner]; });
            }
        }
    } else {
        res.criterion = choice_shares(res.local_choices, universe.size());
        res.selected_index = modal_choice(res.local_choices, universe);
        if (with_preds) {
            if (method == Method::bma) {
                res.final_prediction = aggregate_predictions(stack_rows(summaries, [](const SubsetSummary& s) {
                    return mix_predictions(s.probs.values, s.pred_mean);
                }), cfg);
                if (with_pq) {
                    res.predictive_quantiles = aggregate_tables([&](const SubsetSummary& s) {
                        return mix_quantile_tables(
                            trimmed_weights(s.probs.values),
                            [&s](Eigen::Index k) { return s.pred_quantiles[static_cast<std::size_t>(k)]; }, q, n_test);
                    });
                }
            } else {
                std::size_t j = 0;
                Eigen::MatrixXd rows(static_cast<Eigen::Index>(summaries.size()), n_test);
                for (const auto& s : summaries) {
                    rows.row(static_cast<Eigen::Index>(j)) = s.pred_mean.row(static_cast<Eigen::Index>(res.local_choices[j]));
                    ++j;
                }
                res.final_prediction = aggregate_predictions(rows, cfg);
                if (with_pq) {
                    std::vector<Eigen::MatrixXd> tables;
                    for (std::size_t i = 0; i < summaries.size(); ++i)
                        tables.push_back(summaries[i].pred_quantiles[res.local_choices[i]]);
                    res.predictive_quantiles = aggregate_quantile_vectors(tables, cfg);
                }
            }
        }
    }
    res.selected_model = universe.models[res.selected_index];

    if (with_preds) {
        const auto sel = res.selected_index;
        res.coef_mean = aggregate_predictions(stack_rows(summaries, [sel](const SubsetSummary& s) { return s.beta_mean[sel]; }), cfg);
        if (all_have_coef_quantiles(summaries))
            res.coef_quantiles = aggregate_tables([sel](const SubsetSummary& s) { return s.beta_quantiles[sel]; });
    }
    return res;
}

AggregateResult select_single_machine(const SubsetSummary& summary, const ModelUniverse& universe, Method method,
                                      Strategy strategy) {
    check_summaries(std::span<const SubsetSummary>(&summary, 1), universe);
    const bool with_preds = summary.has_predictions();
    const bool with_pq = with_preds && summary.has_pred_quantiles();
    const auto n_test = summary.pred_mean.cols();

    AggregateResult res;
    res.method = method;
    res.strategy = strategy;
    res.star_probs = summary.probs.values;
    const std::size_t local = local_choice(summary, universe, method);
    res.local_choices = {local};
    res.selected_index = local;
    if (strategy == Strategy::model_combination) {
        switch (method) {
            case Method::bma: res.criterion = summary.probs.values; break;
            case Method::aic: res.criterion = summary.aic.values; break;
            case Method::bic: res.criterion = summary.bic.values; break;
            case Method::median_prob: res.criterion = inclusion_probs(summary.probs, universe).p; break;
            case Method::spike_slab: res.criterion = *summary.ss_inclusion; break;
        }
        res.chosen_model = universe.models[local];
    } else {
        res.criterion = choice_shares(res.local_choices, universe.size());
    }
    res.selected_model = universe.models[local];

    if (with_preds) {
        res.per_model_predictions = summary.pred_mean;
        if (method == Method::bma) {
            res.final_prediction = mix_predictions(summary.probs.values, summary.pred_mean);
            if (with_pq) {
                res.predictive_quantiles = mix_quantile_tables(
                    trimmed_weights(summary.probs.values),
                    [&summary](Eigen::Index k) { return summary.pred_quantiles[static_cast<std::size_t>(k)]; },
                    summary.pred_quantiles.front().rows(), n_test);
            }
        } else {
            res.final_prediction = summary.pred_mean.row(static_cast<Eigen::Index>(local)).transpose();
            if (with_pq) res.predictive_quantiles = summary.pred_quantiles[local];
        }
        res.coef_mean = summary.beta_mean[local];
        if (summary.has_coef_quantiles()) res.coef_quantiles = summary.beta_quantiles[local];
    }
    return res;
}

}  // namespace medpost
