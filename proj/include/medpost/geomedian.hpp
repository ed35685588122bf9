#pragma once

#include <Eigen/Dense>
#include <vector>

namespace medpost {

struct WeiszfeldConfig {
    double tol = 1e-10;        // on iterate movement, relative to 1 + |y|
    int max_iters = 1000;
    double anchor_eps = 1e-12;  // distance at which an iterate counts as sitting on a data point

    void validate() const;
};

struct GeoMedianResult {
    Eigen::VectorXd point;
    double objective = 0.0;
    int iterations = 0;
    bool converged = true;
};

/// Sum of Euclidean distances from y to the rows of `points`.
double geomedian_objective(const Eigen::MatrixXd& points, const Eigen::VectorXd& y);

/// Geometric median of the rows of `points` (R x m).
///
/// One-dimensional inputs return the ordinary median (midpoint of the two
/// middle values for even R). Otherwise every distinct input point is first
/// tested against the subgradient optimality condition; if none qualifies,
/// Weiszfeld iterations run from the coordinate mean with the Vardi-Zhang
/// step at data points. The returned point never has a larger objective
/// than any input point.
GeoMedianResult geometric_median_solve(const Eigen::MatrixXd& points, const WeiszfeldConfig& cfg = {});

Eigen::VectorXd geometric_median(const std::vector<Eigen::VectorXd>& points, const WeiszfeldConfig& cfg = {});

/// Geometric median of R probability vectors (rows), renormalized only if
/// floating drift pushed it off the simplex by more than 1e-12.
Eigen::VectorXd aggregate_model_probs(const Eigen::MatrixXd& subset_probs, const WeiszfeldConfig& cfg = {});

/// Geometric median of R prediction vectors (rows).
Eigen::VectorXd aggregate_predictions(const Eigen::MatrixXd& subset_preds, const WeiszfeldConfig& cfg = {});

/// Geometric median of flattened Q x n quantile tables followed by a
/// per-column sort so that every column is a valid quantile function again.
Eigen::MatrixXd aggregate_quantile_vectors(const std::vector<Eigen::MatrixXd>& subset_quantiles,
                                           const WeiszfeldConfig& cfg = {});

/// Component-wise median of the rows: the one-dimensional geometric median
/// applied to each column.
Eigen::VectorXd componentwise_median(const Eigen::MatrixXd& rows);

}  // namespace medpost
