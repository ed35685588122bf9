#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace medpost {

/// 99 equally spaced levels 0.01, 0.02, ..., 0.99.
const Eigen::VectorXd& default_quantile_levels();

/// Hyndman-Fan type 7 quantile of already sorted values.
double sorted_quantile(std::span<const double> sorted, double level);

/// Quantiles of each column of `draws` (T x n) at `levels`; result is Q x n.
Eigen::MatrixXd column_quantiles(const Eigen::MatrixXd& draws, const Eigen::VectorXd& levels);

/// Linear interpolation of a quantile function tabulated on `levels`.
/// Levels outside the grid extrapolate along the nearest end segment.
double interpolate_quantile(const Eigen::VectorXd& quantiles, const Eigen::VectorXd& levels, double level);

/// Piecewise-linear CDF matching interpolate_quantile, clamped to [0, 1].
double tabulated_cdf(const Eigen::VectorXd& quantiles, const Eigen::VectorXd& levels, double x);

/// Quantiles of the mixture sum_k w_k F_k, where F_k is tabulated by
/// components[k] (one column per component). Components with zero weight
/// are ignored.
Eigen::VectorXd mixture_quantiles(const Eigen::MatrixXd& components, const Eigen::VectorXd& weights,
                                  const Eigen::VectorXd& levels);

/// Sorts each column in place (isotonic repair of a quantile table).
void sort_columns(Eigen::MatrixXd& m);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const noexcept { return hi - lo; }
    bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

/// Central interval with the given coverage read off a quantile table column.
Interval central_interval(const Eigen::VectorXd& quantiles, const Eigen::VectorXd& levels, double coverage = 0.95);

}  // namespace medpost
