#include "medpost/geomedian.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "medpost/errors.hpp"
#include "medpost/quantiles.hpp"

namespace medpost {

void WeiszfeldConfig::validate() const {
    if (!(tol > 0.0)) throw ConfigError("WeiszfeldConfig: tol must be positive");
    if (max_iters < 1) throw ConfigError("WeiszfeldConfig: max_iters must be >= 1");
    if (!(anchor_eps > 0.0)) throw ConfigError("WeiszfeldConfig: anchor_eps must be positive");
}

double geomedian_objective(const Eigen::MatrixXd& points, const Eigen::VectorXd& y) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < points.rows(); ++j) total += (points.row(j).transpose() - y).norm();
    return total;
}

namespace {

double median_of(std::vector<double>& v) {
    const auto n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace

GeoMedianResult geometric_median_solve(const Eigen::MatrixXd& points, const WeiszfeldConfig& cfg) {
    cfg.validate();
    const auto r = points.rows();
    const auto m = points.cols();
    if (r == 0 || m == 0) throw ConfigError("geometric_median: no points");
    if (!points.allFinite()) throw DataError("geometric_median: non-finite input");

    GeoMedianResult res;
    if (r == 1) {
        res.point = points.row(0).transpose();
        return res;
    }
    if (m == 1) {
        std::vector<double> v(points.data(), points.data() + r);
        res.point = Eigen::VectorXd::Constant(1, median_of(v));
        res.objective = geomedian_objective(points, res.point);
        return res;
    }

    // An input point x_k with multiplicity eta is optimal iff the sum of unit
    // vectors from the other points has norm <= eta.
    Eigen::VectorXd weights(r);
    Eigen::Index best_input = 0;
    double best_input_obj = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < r; ++k) {
        double eta = 0.0, obj = 0.0, wsum = 0.0;
        for (Eigen::Index j = 0; j < r; ++j) {
            const double d = (points.row(j) - points.row(k)).norm();
            obj += d;
            if (d == 0.0) {
                eta += 1.0;
                weights(j) = 0.0;
            } else {
                weights(j) = 1.0 / d;
                wsum += weights(j);
            }
        }
        const Eigen::VectorXd pull = wsum * points.row(k).transpose() - points.transpose() * weights;
        if (pull.norm() <= eta) {
            res.point = points.row(k).transpose();
            res.objective = obj;
            return res;
        }
        if (obj < best_input_obj) {
            best_input_obj = obj;
            best_input = k;
        }
    }

    Eigen::VectorXd y = points.colwise().mean().transpose();
    Eigen::VectorXd next(m);
    Eigen::VectorXd dist(r);
    res.converged = false;
#ifndef NDEBUG
    double prev_obj = geomedian_objective(points, y);
#endif
    for (int it = 0; it < cfg.max_iters; ++it) {
        res.iterations = it + 1;
        const double eps = cfg.anchor_eps * (1.0 + y.lpNorm<Eigen::Infinity>());
        double eta = 0.0, wsum = 0.0;
        for (Eigen::Index j = 0; j < r; ++j) {
            dist(j) = (points.row(j).transpose() - y).norm();
            if (dist(j) < eps) {
                eta += 1.0;
                weights(j) = 0.0;
            } else {
                weights(j) = 1.0 / dist(j);
                wsum += weights(j);
            }
        }
        if (wsum == 0.0) {  // every point coincides with y
            res.converged = true;
            break;
        }
        const Eigen::VectorXd weighted = points.transpose() * weights;
        next = weighted / wsum;
        if (eta > 0.0) {
            // Vardi-Zhang: blend the Weiszfeld map with the current point.
            const double pull = (weighted - wsum * y).norm();
            if (pull <= eta) {
                res.converged = true;
                break;
            }
            const double frac = eta / pull;
            next = (1.0 - frac) * next + frac * y;
        }
        const double move = (next - y).norm();
        y.swap(next);
#ifndef NDEBUG
        const double obj = geomedian_objective(points, y);
        assert(obj <= prev_obj * (1.0 + 1e-12) + 1e-300);
        prev_obj = obj;
#endif
        if (move <= cfg.tol * (1.0 + y.norm())) {
            res.converged = true;
            break;
        }
    }

    res.objective = geomedian_objective(points, y);
    if (best_input_obj < res.objective) {
        res.point = points.row(best_input).transpose();
        res.objective = best_input_obj;
    } else {
        res.point = std::move(y);
    }
    return res;
}

Eigen::VectorXd geometric_median(const std::vector<Eigen::VectorXd>& points, const WeiszfeldConfig& cfg) {
    if (points.empty()) throw ConfigError("geometric_median: no points");
    const auto m = points.front().size();
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(points.size()), m);
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (points[j].size() != m)
            throw ConfigError("geometric_median: point " + std::to_string(j) + " has dimension " +
                              std::to_string(points[j].size()) + ", expected " + std::to_string(m));
        rows.row(static_cast<Eigen::Index>(j)) = points[j].transpose();
    }
    return geometric_median_solve(rows, cfg).point;
}

Eigen::VectorXd aggregate_model_probs(const Eigen::MatrixXd& subset_probs, const WeiszfeldConfig& cfg) {
    for (Eigen::Index j = 0; j < subset_probs.rows(); ++j) {
        if ((subset_probs.row(j).array() < 0.0).any() || std::abs(subset_probs.row(j).sum() - 1.0) > 1e-9)
            throw DataError("aggregate_model_probs: row " + std::to_string(j) + " is not a probability vector");
    }
    Eigen::VectorXd p = geometric_median_solve(subset_probs, cfg).point;
    p = p.cwiseMax(0.0);
    const double total = p.sum();
    if (!(total > 0.0)) throw NumericError("aggregate_model_probs: aggregated vector has zero mass");
    if (std::abs(total - 1.0) > 1e-12) p /= total;
    return p;
}

Eigen::VectorXd aggregate_predictions(const Eigen::MatrixXd& subset_preds, const WeiszfeldConfig& cfg) {
    return geometric_median_solve(subset_preds, cfg).point;
}

Eigen::MatrixXd aggregate_quantile_vectors(const std::vector<Eigen::MatrixXd>& subset_quantiles,
                                           const WeiszfeldConfig& cfg) {
    if (subset_quantiles.empty()) throw ConfigError("aggregate_quantile_vectors: no tables");
    const auto q = subset_quantiles.front().rows();
    const auto n = subset_quantiles.front().cols();
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(subset_quantiles.size()), q * n);
    for (std::size_t j = 0; j < subset_quantiles.size(); ++j) {
        const auto& t = subset_quantiles[j];
        if (t.rows() != q || t.cols() != n)
            throw ConfigError("aggregate_quantile_vectors: quantile grid mismatch in subset " + std::to_string(j));
        rows.row(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::RowVectorXd>(t.data(), q * n);
    }
    const Eigen::VectorXd flat = geometric_median_solve(rows, cfg).point;
    Eigen::MatrixXd out = Eigen::Map<const Eigen::MatrixXd>(flat.data(), q, n);
    sort_columns(out);
    return out;
}

Eigen::VectorXd componentwise_median(const Eigen::MatrixXd& rows) {
    if (rows.rows() == 0) throw ConfigError("componentwise_median: no rows");
    Eigen::VectorXd out(rows.cols());
    std::vector<double> v(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        for (Eigen::Index j = 0; j < rows.rows(); ++j) v[static_cast<std::size_t>(j)] = rows(j, c);
        out(c) = rows.rows() == 1 ? v.front() : median_of(v);
    }
    return out;
}

}  // namespace medpost
