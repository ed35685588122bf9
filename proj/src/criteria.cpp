#include "medpost/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "medpost/errors.hpp"

namespace medpost {

ModelSpec ModelSpec::from_indices(std::size_t d, const std::vector<std::size_t>& indices) {
    std::vector<bool> mask(d, false);
    for (const auto i : indices) {
        if (i >= d) throw ConfigError("ModelSpec: predictor index out of range");
        mask[i] = true;
    }
    return ModelSpec(std::move(mask));
}

std::size_t ModelSpec::count() const noexcept {
    return static_cast<std::size_t>(std::count(included_.begin(), included_.end(), true));
}

std::vector<std::size_t> ModelSpec::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < included_.size(); ++i)
        if (included_[i]) out.push_back(i);
    return out;
}

std::string ModelSpec::to_string() const {
    std::string s;
    s.reserve(included_.size());
    for (const bool b : included_) s.push_back(b ? '1' : '0');
    return s;
}

ModelSpec ModelSpec::parse(const std::string& bits) {
    std::vector<bool> mask;
    for (const char c : bits) {
        if (c == '1')
            mask.push_back(true);
        else if (c == '0')
            mask.push_back(false);
        else
            throw ConfigError("ModelSpec::parse: expected 0/1 string, got '" + bits + "'");
    }
    return ModelSpec(std::move(mask));
}

bool tie_break_prefers(const ModelSpec& a, const ModelSpec& b) {
    const auto ca = a.count();
    const auto cb = b.count();
    if (ca != cb) return ca < cb;
    return a.indices() < b.indices();
}

std::optional<std::size_t> ModelUniverse::find(const ModelSpec& m) const {
    if (index_.size() != models.size()) {
        const auto it = std::find(models.begin(), models.end(), m);
        if (it == models.end()) return std::nullopt;
        return static_cast<std::size_t>(it - models.begin());
    }
    const auto it = index_.find(m);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t ModelUniverse::nearest(const ModelSpec& m) const {
    if (auto k = find(m)) return *k;
    if (models.empty()) throw ConfigError("ModelUniverse::nearest: empty universe");
    std::size_t best = 0;
    std::size_t best_dist = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < models.size(); ++k) {
        if (models[k].dim() != m.dim()) throw ConfigError("ModelUniverse::nearest: dimension mismatch");
        std::size_t dist = 0;
        for (std::size_t d = 0; d < m.dim(); ++d) dist += models[k].included()[d] != m.included()[d];
        if (dist < best_dist || (dist == best_dist && tie_break_prefers(models[k], models[best]))) {
            best = k;
            best_dist = dist;
        }
    }
    return best;
}

void ModelUniverse::rebuild_index() {
    index_.clear();
    for (std::size_t k = 0; k < models.size(); ++k) index_.emplace(models[k], k);
}

void ModelUniverse::validate() const {
    if (models.empty()) throw ConfigError("ModelUniverse: no models");
    if (prior_probs.size() != static_cast<Eigen::Index>(models.size()))
        throw ConfigError("ModelUniverse: prior length differs from model count");
    if ((prior_probs.array() < 0.0).any() || std::abs(prior_probs.sum() - 1.0) > 1e-12)
        throw ConfigError("ModelUniverse: prior is not a probability vector");
    const auto d = models.front().dim();
    std::set<ModelSpec> seen;
    for (const auto& m : models) {
        if (m.dim() != d) throw ConfigError("ModelUniverse: models disagree on predictor count");
        if (!seen.insert(m).second) throw ConfigError("ModelUniverse: duplicate model " + m.to_string());
    }
}

namespace {

void enumerate_fixed(std::size_t d, std::size_t m, std::size_t start, std::vector<std::size_t>& current,
                     std::vector<ModelSpec>& out) {
    if (current.size() == m) {
        out.push_back(ModelSpec::from_indices(d, current));
        return;
    }
    for (std::size_t i = start; i + (m - current.size()) <= d; ++i) {
        current.push_back(i);
        enumerate_fixed(d, m, i + 1, current, out);
        current.pop_back();
    }
}

}  // namespace

ModelUniverse enumerate_universe(std::size_t d, const UniverseSpec& spec) {
    ModelUniverse u;
    switch (spec.kind) {
        case UniverseKind::all_subsets: {
            if (d > kMaxAllSubsetsPredictors)
                throw ConfigError("enumerate_universe: all_subsets limited to " +
                                  std::to_string(kMaxAllSubsetsPredictors) + " predictors");
            // Ordered by size, then lexicographically, so index 0 is the empty model.
            for (std::size_t m = 0; m <= d; ++m) {
                std::vector<std::size_t> current;
                enumerate_fixed(d, m, 0, current, u.models);
            }
            break;
        }
        case UniverseKind::fixed_size: {
            if (spec.model_size > d) throw ConfigError("enumerate_universe: model size exceeds predictor count");
            std::vector<std::size_t> current;
            enumerate_fixed(d, spec.model_size, 0, current, u.models);
            break;
        }
        case UniverseKind::user_list: {
            if (spec.user_models.empty()) throw ConfigError("enumerate_universe: empty user model list");
            for (const auto& m : spec.user_models)
                if (m.dim() != d) throw ConfigError("enumerate_universe: user model has wrong length");
            u.models = spec.user_models;
            break;
        }
    }
    const auto k = static_cast<Eigen::Index>(u.models.size());
    u.prior_probs = spec.prior_probs ? *spec.prior_probs : Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    u.validate();
    u.rebuild_index();
    return u;
}

CriterionVector posterior_model_probs(const Eigen::VectorXd& log_marginals, const ModelUniverse& universe,
                                      int subset_id) {
    if (log_marginals.size() != static_cast<Eigen::Index>(universe.size()))
        throw ConfigError("posterior_model_probs: length differs from universe");
    Eigen::VectorXd logw(log_marginals.size());
    for (Eigen::Index k = 0; k < logw.size(); ++k) {
        if (std::isnan(log_marginals(k)) || log_marginals(k) == std::numeric_limits<double>::infinity())
            throw NumericError("posterior_model_probs: invalid log marginal");
        const double prior = universe.prior_probs(k);
        logw(k) = prior > 0.0 ? std::log(prior) + log_marginals(k) : -std::numeric_limits<double>::infinity();
    }
    const double top = logw.maxCoeff();
    if (!std::isfinite(top)) throw NumericError("posterior_model_probs: every model has zero weight");
    Eigen::VectorXd p = (logw.array() - top).exp();
    p /= p.sum();
    return {CriterionKind::posterior_prob, std::move(p), subset_id};
}

double aic_r(double max_loglik, std::size_t d_model, int r) {
    return -2.0 * r * max_loglik + 2.0 * (static_cast<double>(d_model) + 1.0);
}

double bic_r(double max_loglik, std::size_t d_model, double n_effective, int r) {
    if (!(n_effective >= 1.0)) throw ConfigError("bic_r: n_effective must be at least 1");
    return -2.0 * r * max_loglik + (static_cast<double>(d_model) + 1.0) * std::log(n_effective);
}

ModelSpec median_probability_model(const InclusionProbs& p) {
    std::vector<bool> mask(static_cast<std::size_t>(p.p.size()));
    for (Eigen::Index d = 0; d < p.p.size(); ++d) mask[static_cast<std::size_t>(d)] = p.p(d) >= 0.5;
    return ModelSpec(std::move(mask));
}

InclusionProbs inclusion_probs(const CriterionVector& probs, const ModelUniverse& universe) {
    if (probs.values.size() != static_cast<Eigen::Index>(universe.size()))
        throw ConfigError("inclusion_probs: probability vector misaligned with universe");
    const auto d = universe.predictor_count();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < universe.size(); ++k)
        for (const auto i : universe.models[k].indices()) p(static_cast<Eigen::Index>(i)) += probs.values(static_cast<Eigen::Index>(k));
    return {p.cwiseMin(1.0).cwiseMax(0.0)};
}

Moments bma_moments(const Eigen::VectorXd& means, const Eigen::VectorXd& vars, const Eigen::VectorXd& probs) {
    if (means.size() != vars.size() || means.size() != probs.size() || means.size() == 0)
        throw ConfigError("bma_moments: length mismatch");
    const double mean = probs.dot(means);
    double var = 0.0;
    for (Eigen::Index k = 0; k < means.size(); ++k) {
        const double dev = means(k) - mean;
        var += probs(k) * (vars(k) + dev * dev);
    }
    return {mean, var};
}

std::size_t best_model(const Eigen::VectorXd& values, const ModelUniverse& universe, bool maximize) {
    if (values.size() != static_cast<Eigen::Index>(universe.size()) || values.size() == 0)
        throw ConfigError("best_model: values misaligned with universe");
    std::size_t best = 0;
    for (std::size_t k = 1; k < universe.size(); ++k) {
        const double v = values(static_cast<Eigen::Index>(k));
        const double b = values(static_cast<Eigen::Index>(best));
        const bool better = maximize ? v > b : v < b;
        if (better || (v == b && tie_break_prefers(universe.models[k], universe.models[best]))) best = k;
    }
    return best;
}

std::string to_string(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::posterior_prob: return "posterior_prob";
        case CriterionKind::aic: return "aic";
        case CriterionKind::bic: return "bic";
    }
    return "unknown";
}

}  // namespace medpost
