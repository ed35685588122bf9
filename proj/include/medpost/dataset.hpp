#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medpost {

/// Design matrix plus response. Immutable once constructed; the constructor
/// enforces shape agreement and finiteness.
class Dataset {
public:
    Dataset() = default;
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> column_names = {});

    const Eigen::MatrixXd& x() const noexcept { return x_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    const std::vector<std::string>& column_names() const noexcept { return names_; }

    Eigen::Index n() const noexcept { return x_.rows(); }
    Eigen::Index d() const noexcept { return x_.cols(); }

    /// Rows in the given order.
    Dataset rows(std::span<const std::size_t> indices) const;

    /// Same design, different response (length must match).
    Dataset with_response(Eigen::VectorXd y) const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    std::vector<std::string> names_;
};

/// Reads a comma-separated file with a mandatory header row. The response
/// column is removed; the remaining columns form x in file order. Lines
/// starting with # before the header are skipped.
Dataset load_csv(const std::filesystem::path& path, const std::string& response_column);

void write_csv(const std::filesystem::path& path, const Dataset& ds,
               const std::string& response_column = "y");

/// Centers each predictor and scales it to unit Euclidean norm. y is untouched.
Dataset standardize(const Dataset& ds);

struct SyntheticSpec {
    Eigen::Index n = 5000;
    Eigen::Index d = 10;
    Eigen::Index n_true = 3;
    std::optional<Eigen::VectorXd> beta_true;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Dataset data;
    Eigen::VectorXd beta_true;
};

/// Coefficients used when a spec leaves beta_true unset: the first n_true
/// predictors get 3, 1.5, 2 (cycled), the rest 0.
Eigen::VectorXd default_beta(Eigen::Index d, Eigen::Index n_true);

/// x ~ iid N(0, 1), y = x beta + N(0, noise_sd^2). Deterministic in spec.seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Row-to-subset assignment. Members of each subset are kept in ascending
/// row order, so r = 1 reproduces the input exactly.
struct Partition {
    std::vector<std::size_t> assignments;         // length N, values in [0, r)
    std::size_t r = 0;
    std::vector<std::size_t> sizes;               // length r
    std::vector<std::vector<std::size_t>> members;  // rows of each subset
};

/// Seeded uniform permutation dealt round-robin into r subsets.
Partition partition(std::size_t n, std::size_t r, std::uint64_t seed);
Partition partition(const Dataset& ds, std::size_t r, std::uint64_t seed);

struct OutlierPlan {
    std::size_t count = 0;
    double magnitude = 1e4;
    std::optional<std::vector<std::size_t>> target_indices;
};

/// Overwrites `count` responses with Y_{i*} + sgn(Y_{i*}) * magnitude where
/// i* = argmax |Y_i| of the uncontaminated response. Targets default to
/// seeded distinct random rows.
Dataset inject_outliers(const Dataset& ds, const OutlierPlan& plan, std::uint64_t seed);

/// The value inject_outliers writes for this response and magnitude.
double outlier_value(const Eigen::VectorXd& y, double magnitude);

/// First `count` rows of the given subsets (in subset order), for pinning
/// contamination into chosen subsets.
std::vector<std::size_t> rows_in_subsets(const Partition& part, std::span<const std::size_t> subsets,
                                         std::size_t count);

struct HoldoutSplit {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> test_indices;   // ascending, in the source row numbering
    std::vector<std::size_t> train_indices;  // ascending
};

/// Seeded random holdout of n_test rows.
HoldoutSplit split_holdout(const Dataset& ds, std::size_t n_test, std::uint64_t seed);

}  // namespace medpost
