#include "medpost/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "medpost/errors.hpp"

namespace medpost {

const Eigen::VectorXd& default_quantile_levels() {
    static const Eigen::VectorXd levels = Eigen::VectorXd::LinSpaced(99, 0.01, 0.99);
    return levels;
}

double sorted_quantile(std::span<const double> sorted, double level) {
    if (sorted.empty()) throw ConfigError("sorted_quantile: no values");
    if (!(level >= 0.0 && level <= 1.0)) throw ConfigError("sorted_quantile: level outside [0, 1]");
    const double h = level * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Eigen::MatrixXd column_quantiles(const Eigen::MatrixXd& draws, const Eigen::VectorXd& levels) {
    if (draws.rows() == 0) throw ConfigError("column_quantiles: no draws");
    Eigen::MatrixXd out(levels.size(), draws.cols());
    std::vector<double> col(static_cast<std::size_t>(draws.rows()));
    for (Eigen::Index j = 0; j < draws.cols(); ++j) {
        for (Eigen::Index t = 0; t < draws.rows(); ++t) col[static_cast<std::size_t>(t)] = draws(t, j);
        std::sort(col.begin(), col.end());
        for (Eigen::Index q = 0; q < levels.size(); ++q) out(q, j) = sorted_quantile(col, levels(q));
    }
    return out;
}

namespace {

void check_table(const Eigen::VectorXd& quantiles, const Eigen::VectorXd& levels) {
    if (quantiles.size() != levels.size() || levels.size() < 2)
        throw ConfigError("quantile table: need at least two levels matching the values");
}

}  // namespace

double interpolate_quantile(const Eigen::VectorXd& quantiles, const Eigen::VectorXd& levels, double level) {
    check_table(quantiles, levels);
    const auto n = levels.size();
    Eigen::Index i = 0;
    if (level >= levels(n - 1))
        i = n - 2;
    else if (level > levels(0))
        i = static_cast<Eigen::Index>(std::upper_bound(levels.data(), levels.data() + n, level) - levels.data()) - 1;
    const double t = (level - levels(i)) / (levels(i + 1) - levels(i));
    return quantiles(i) + t * (quantiles(i + 1) - quantiles(i));
}

double tabulated_cdf(const Eigen::VectorXd& quantiles, const Eigen::VectorXd& levels, double x) {
    check_table(quantiles, levels);
    const auto n = quantiles.size();
    const double* q = quantiles.data();
    Eigen::Index i;
    if (x < q[0]) {
        i = 0;
    } else if (x >= q[n - 1]) {
        i = n - 2;
    } else {
        i = static_cast<Eigen::Index>(std::upper_bound(q, q + n, x) - q) - 1;
    }
    const double span = q[i + 1] - q[i];
    double level;
    if (span > 0.0) {
        level = levels(i) + (x - q[i]) / span * (levels(i + 1) - levels(i));
    } else {
        level = x < q[i] ? 0.0 : (x > q[i] ? 1.0 : levels(i + 1));
    }
    return std::clamp(level, 0.0, 1.0);
}

Eigen::VectorXd mixture_quantiles(const Eigen::MatrixXd& components, const Eigen::VectorXd& weights,
                                  const Eigen::VectorXd& levels) {
    if (components.cols() != weights.size() || components.rows() != levels.size())
        throw ConfigError("mixture_quantiles: shape mismatch");
    std::vector<Eigen::Index> active;
    double total = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        if (weights(k) < 0.0) throw ConfigError("mixture_quantiles: negative weight");
        if (weights(k) > 0.0) {
            active.push_back(k);
            total += weights(k);
        }
    }
    if (active.empty()) throw ConfigError("mixture_quantiles: all weights are zero");
    if (active.size() == 1) return components.col(active.front());

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto k : active) {
        const Eigen::VectorXd col = components.col(k);
        lo = std::min(lo, interpolate_quantile(col, levels, 0.0));
        hi = std::max(hi, interpolate_quantile(col, levels, 1.0));
    }
    auto cdf = [&](double x) {
        double g = 0.0;
        for (const auto k : active) g += weights(k) * tabulated_cdf(components.col(k), levels, x);
        return g / total;
    };
    Eigen::VectorXd out(levels.size());
    for (Eigen::Index q = 0; q < levels.size(); ++q) {
        double a = lo, b = hi;
        for (int it = 0; it < 200 && b - a > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
            const double mid = 0.5 * (a + b);
            if (cdf(mid) < levels(q))
                a = mid;
            else
                b = mid;
        }
        out(q) = 0.5 * (a + b);
    }
    return out;
}

void sort_columns(Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) std::sort(m.col(j).data(), m.col(j).data() + m.rows());
}

Interval central_interval(const Eigen::VectorXd& quantiles, const Eigen::VectorXd& levels, double coverage) {
    if (!(coverage > 0.0 && coverage < 1.0)) throw ConfigError("central_interval: coverage must be in (0, 1)");
    const double tail = 0.5 * (1.0 - coverage);
    return {interpolate_quantile(quantiles, levels, tail), interpolate_quantile(quantiles, levels, 1.0 - tail)};
}

}  // namespace medpost
