#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medpost {

/// A candidate model: which of the D predictors enter. The intercept, when
/// configured, is implied and not part of the mask.
class ModelSpec {
public:
    ModelSpec() = default;
    explicit ModelSpec(std::vector<bool> included) : included_(std::move(included)) {}
    static ModelSpec from_indices(std::size_t d, const std::vector<std::size_t>& indices);

    const std::vector<bool>& included() const noexcept { return included_; }
    std::size_t dim() const noexcept { return included_.size(); }
    std::size_t count() const noexcept;
    bool contains(std::size_t d) const { return included_.at(d); }
    std::vector<std::size_t> indices() const;

    /// "0110..." bit string, predictor 1 first.
    std::string to_string() const;
    static ModelSpec parse(const std::string& bits);

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
    friend bool operator<(const ModelSpec& a, const ModelSpec& b) { return a.included_ < b.included_; }

private:
    std::vector<bool> included_;
};

/// Deterministic tie-break: fewer predictors first, then lexicographic order
/// of the included index lists. Returns true when a should win over b.
bool tie_break_prefers(const ModelSpec& a, const ModelSpec& b);

struct ModelUniverse {
    std::vector<ModelSpec> models;
    Eigen::VectorXd prior_probs;

    std::size_t size() const noexcept { return models.size(); }
    std::size_t predictor_count() const { return models.empty() ? 0 : models.front().dim(); }
    std::optional<std::size_t> find(const ModelSpec& m) const;
    /// Closest model by Hamming distance; ties resolved by tie_break_prefers.
    std::size_t nearest(const ModelSpec& m) const;

    void validate() const;
    /// Builds the lookup table behind find(); call after editing `models`.
    void rebuild_index();

private:
    std::map<ModelSpec, std::size_t> index_;
};

enum class UniverseKind { all_subsets, fixed_size, user_list };

struct UniverseSpec {
    UniverseKind kind = UniverseKind::all_subsets;
    std::size_t model_size = 0;               // fixed_size
    std::vector<ModelSpec> user_models;       // user_list
    std::optional<Eigen::VectorXd> prior_probs;  // uniform when unset
};

inline constexpr std::size_t kMaxAllSubsetsPredictors = 20;

ModelUniverse enumerate_universe(std::size_t d, const UniverseSpec& spec);

enum class CriterionKind { posterior_prob, aic, bic };

struct CriterionVector {
    CriterionKind kind = CriterionKind::posterior_prob;
    Eigen::VectorXd values;
    int subset_id = 0;
};

struct InclusionProbs {
    Eigen::VectorXd p;
};

/// p_k proportional to prior_k * exp(log_marginal_k), normalized in log space.
CriterionVector posterior_model_probs(const Eigen::VectorXd& log_marginals, const ModelUniverse& universe,
                                      int subset_id = 0);

/// -2 R logL + 2 (d_model + 1).
double aic_r(double max_loglik, std::size_t d_model, int r);
/// -2 R logL + (d_model + 1) log(n_effective).
double bic_r(double max_loglik, std::size_t d_model, double n_effective, int r);

ModelSpec median_probability_model(const InclusionProbs& p);

InclusionProbs inclusion_probs(const CriterionVector& probs, const ModelUniverse& universe);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mixture mean and variance; the variance is accumulated as
/// sum p_k (v_k + (m_k - mean)^2), which equals the textbook form exactly
/// and cannot go negative.
Moments bma_moments(const Eigen::VectorXd& means, const Eigen::VectorXd& vars, const Eigen::VectorXd& probs);

/// Index of the best entry (max when maximize, else min) with ties resolved
/// through tie_break_prefers on the universe's models.
std::size_t best_model(const Eigen::VectorXd& values, const ModelUniverse& universe, bool maximize);

std::string to_string(CriterionKind kind);

}  // namespace medpost
