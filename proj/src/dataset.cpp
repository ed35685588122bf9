#include "medpost/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "medpost/errors.hpp"
#include "medpost/rng.hpp"

namespace medpost {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> column_names)
    : x_(std::move(x)), y_(std::move(y)), names_(std::move(column_names)) {
    if (x_.rows() != y_.size())
        throw ConfigError("Dataset: x has " + std::to_string(x_.rows()) + " rows but y has " +
                          std::to_string(y_.size()) + " entries");
    if (x_.rows() < 1) throw DataError("Dataset: no rows");
    if (x_.cols() < 1) throw DataError("Dataset: no predictor columns");
    if (!x_.allFinite() || !y_.allFinite()) throw DataError("Dataset: non-finite entries");
    if (names_.empty()) {
        for (Eigen::Index j = 0; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
    } else if (static_cast<Eigen::Index>(names_.size()) != x_.cols()) {
        throw ConfigError("Dataset: column name count does not match x");
    }
}

Dataset Dataset::rows(std::span<const std::size_t> indices) const {
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(indices.size()), x_.cols());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = static_cast<Eigen::Index>(indices[i]);
        if (src >= x_.rows()) throw ConfigError("Dataset::rows: index out of range");
        xs.row(static_cast<Eigen::Index>(i)) = x_.row(src);
        ys(static_cast<Eigen::Index>(i)) = y_(src);
    }
    return Dataset(std::move(xs), std::move(ys), names_);
}

Dataset Dataset::with_response(Eigen::VectorXd y) const { return Dataset(x_, std::move(y), names_); }

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& response_column) {
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open " + path.string());

    std::string line;
    bool got = false;
    while ((got = static_cast<bool>(std::getline(in, line)))) {
        if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
        if (line.empty() || line[0] != '#') break;  // leading comment lines, e.g. a manifest hash
    }
    if (!got) throw DataError("load_csv: empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    for (auto& h : split_fields(line)) header.push_back(trim(h));

    const auto resp_it = std::find(header.begin(), header.end(), response_column);
    if (resp_it == header.end())
        throw DataError("load_csv: response column '" + response_column + "' not in header");
    const auto resp_col = static_cast<std::size_t>(resp_it - header.begin());
    if (header.size() < 2) throw DataError("load_csv: need at least one predictor column");

    std::vector<std::string> names;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != resp_col) names.push_back(header[j]);

    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t row = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw DataError("load_csv: line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const std::string cell = trim(fields[j]);
            double value = 0.0;
            const auto* first = cell.data();
            const auto* last = cell.data() + cell.size();
            const auto res = std::from_chars(first, last, value);
            if (cell.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(value))
                throw DataError("load_csv: non-numeric cell at row " + std::to_string(row + 1) +
                                ", column '" + header[j] + "': '" + cell + "'");
            if (j == resp_col)
                ys.push_back(value);
            else
                xs.push_back(value);
        }
        ++row;
    }
    if (row == 0) throw DataError("load_csv: no data rows in " + path.string());

    const auto n = static_cast<Eigen::Index>(row);
    const auto d = static_cast<Eigen::Index>(names.size());
    Eigen::MatrixXd x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        xs.data(), n, d);
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    return Dataset(std::move(x), std::move(y), std::move(names));
}

void write_csv(const std::filesystem::path& path, const Dataset& ds, const std::string& response_column) {
    std::ofstream out(path);
    if (!out) throw DataError("write_csv: cannot open " + path.string());
    out << std::setprecision(17);
    for (const auto& name : ds.column_names()) out << name << ',';
    out << response_column << '\n';
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.d(); ++j) out << ds.x()(i, j) << ',';
        out << ds.y()(i) << '\n';
    }
}

Dataset standardize(const Dataset& ds) {
    if (ds.n() < 2) throw ConfigError("standardize: need at least 2 rows");
    Eigen::MatrixXd x = ds.x();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        auto col = x.col(j);
        col.array() -= col.mean();
        const double norm = col.norm();
        // Relative test: a column of identical values leaves only rounding noise.
        const double scale = std::max(1.0, ds.x().col(j).cwiseAbs().maxCoeff());
        if (!(norm > 1e-12 * scale * std::sqrt(static_cast<double>(x.rows()))))
            throw DataError("standardize: column '" + ds.column_names()[static_cast<std::size_t>(j)] +
                            "' has zero variance");
        col /= norm;
    }
    return Dataset(std::move(x), ds.y(), ds.column_names());
}

Eigen::VectorXd default_beta(Eigen::Index d, Eigen::Index n_true) {
    static constexpr double pattern[] = {3.0, 1.5, 2.0};
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < n_true && j < d; ++j) beta(j) = pattern[j % 3];
    return beta;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 1 || spec.d < 1) throw ConfigError("generate_synthetic: n and d must be positive");
    if (spec.n_true < 0 || spec.n_true > spec.d)
        throw ConfigError("generate_synthetic: n_true exceeds d");
    if (!(spec.noise_sd >= 0.0)) throw ConfigError("generate_synthetic: noise_sd must be nonnegative");

    Eigen::VectorXd beta;
    if (spec.beta_true) {
        beta = *spec.beta_true;
        if (beta.size() != spec.d) throw ConfigError("generate_synthetic: beta_true length != d");
        if ((beta.array() != 0.0).count() != spec.n_true)
            throw ConfigError("generate_synthetic: beta_true must have exactly n_true nonzeros");
    } else {
        beta = default_beta(spec.d, spec.n_true);
    }

    Rng rng(spec.seed);
    Eigen::MatrixXd x(spec.n, spec.d);
    for (Eigen::Index i = 0; i < spec.n; ++i)
        for (Eigen::Index j = 0; j < spec.d; ++j) x(i, j) = rng.normal();
    Eigen::VectorXd y = x * beta;
    if (spec.noise_sd > 0.0)
        for (Eigen::Index i = 0; i < spec.n; ++i) y(i) += spec.noise_sd * rng.normal();
    return {Dataset(std::move(x), std::move(y)), std::move(beta)};
}

Partition partition(std::size_t n, std::size_t r, std::uint64_t seed) {
    if (r == 0) throw ConfigError("partition: subset count must be at least 1");
    if (r > n)
        throw ConfigError("partition: subset count " + std::to_string(r) + " exceeds row count " +
                          std::to_string(n));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (r > 1) {
        Rng rng(seed);
        rng.shuffle(std::span<std::size_t>(perm));
    }
    Partition part;
    part.r = r;
    part.assignments.assign(n, 0);
    part.sizes.assign(r, 0);
    part.members.assign(r, {});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t subset = i % r;
        part.assignments[perm[i]] = subset;
        ++part.sizes[subset];
    }
    for (std::size_t row = 0; row < n; ++row) part.members[part.assignments[row]].push_back(row);
    return part;
}

Partition partition(const Dataset& ds, std::size_t r, std::uint64_t seed) {
    return partition(static_cast<std::size_t>(ds.n()), r, seed);
}

double outlier_value(const Eigen::VectorXd& y, double magnitude) {
    Eigen::Index arg = 0;
    y.cwiseAbs().maxCoeff(&arg);
    const double extreme = y(arg);
    const double sign = extreme > 0.0 ? 1.0 : (extreme < 0.0 ? -1.0 : 0.0);
    return extreme + sign * magnitude;
}

Dataset inject_outliers(const Dataset& ds, const OutlierPlan& plan, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(ds.n());
    if (plan.count > n) throw ConfigError("inject_outliers: count exceeds row count");
    if (!(plan.magnitude >= 0.0)) throw ConfigError("inject_outliers: magnitude must be nonnegative");
    if (plan.count == 0) return ds;

    std::vector<std::size_t> targets;
    if (plan.target_indices) {
        targets = *plan.target_indices;
        if (targets.size() != plan.count)
            throw ConfigError("inject_outliers: target_indices length differs from count");
        auto sorted = targets;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("inject_outliers: duplicate target indices");
        if (sorted.back() >= n) throw ConfigError("inject_outliers: target index out of range");
    } else {
        Rng rng(seed);
        targets = rng.sample_without_replacement(n, plan.count);
    }

    const double v = outlier_value(ds.y(), plan.magnitude);
    Eigen::VectorXd y = ds.y();
    for (const auto t : targets) y(static_cast<Eigen::Index>(t)) = v;
    return ds.with_response(std::move(y));
}

std::vector<std::size_t> rows_in_subsets(const Partition& part, std::span<const std::size_t> subsets,
                                         std::size_t count) {
    std::vector<std::size_t> rows;
    for (const auto s : subsets) {
        if (s >= part.r) throw ConfigError("rows_in_subsets: subset index out of range");
        for (const auto row : part.members[s]) {
            if (rows.size() == count) return rows;
            rows.push_back(row);
        }
    }
    if (rows.size() < count) throw ConfigError("rows_in_subsets: chosen subsets have too few rows");
    return rows;
}

HoldoutSplit split_holdout(const Dataset& ds, std::size_t n_test, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(ds.n());
    if (n_test == 0 || n_test >= n) throw ConfigError("split_holdout: need 0 < n_test < N");
    Rng rng(seed);
    auto test = rng.sample_without_replacement(n, n_test);
    std::sort(test.begin(), test.end());
    std::vector<std::size_t> train;
    train.reserve(n - n_test);
    std::size_t t = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t < test.size() && test[t] == i) {
            ++t;
            continue;
        }
        train.push_back(i);
    }
    return {ds.rows(train), ds.rows(test), test, train};
}

}  // namespace medpost
