#include "medpost/output.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <json.hpp>

#include "medpost/errors.hpp"
#include "medpost/quantiles.hpp"

namespace medpost {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string cell(double v) { return format_double(v); }
template <typename T>
std::string cell_opt(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_same_v<T, bool>)
        return *v ? "1" : "0";
    else if constexpr (std::is_floating_point_v<T>)
        return format_double(*v);
    else
        return std::to_string(*v);
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

// JSON value of a CSV cell: numbers stay numbers, empty cells become null.
json json_cell(const std::string& s) {
    if (s.empty()) return nullptr;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(v)) return v;
    return s;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

void TableWriter::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw ConfigError("TableWriter: row width differs from header");
    rows_.push_back(std::move(cells));
}

void TableWriter::write(const fs::path& csv_path, const std::string& manifest_hash, bool jsonl) const {
    auto out = open_out(csv_path);
    out << "# manifest_hash=" << manifest_hash << "\n";
    for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << quote(columns_[c]);
    out << "\n";
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << quote(row[c]);
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + csv_path.string());
    if (!jsonl) return;
    fs::path jpath = csv_path;
    jpath.replace_extension(".jsonl");
    auto jout = open_out(jpath);
    for (const auto& row : rows_) {
        json obj = json::object();
        obj["manifest_hash"] = manifest_hash;
        for (std::size_t c = 0; c < row.size(); ++c) obj[columns_[c]] = json_cell(row[c]);
        jout << obj.dump() << "\n";
    }
}

void write_predictions(const fs::path& dir, const AggregateResult& result, const std::vector<std::size_t>& test_rows,
                       const Eigen::VectorXd* truth, const std::string& manifest_hash) {
    const bool have_q = result.predictive_quantiles.size() > 0;
    std::vector<std::string> cols = {"test_row", "prediction"};
    if (have_q) cols.insert(cols.end(), {"q025", "q500", "q975"});
    if (truth) cols.push_back("truth");
    TableWriter t(cols);
    const auto& levels = default_quantile_levels();
    for (Eigen::Index i = 0; i < result.final_prediction.size(); ++i) {
        std::vector<std::string> row = {
            std::to_string(i < static_cast<Eigen::Index>(test_rows.size()) ? test_rows[static_cast<std::size_t>(i)]
                                                                           : static_cast<std::size_t>(i)),
            cell(result.final_prediction(i))};
        if (have_q) {
            const Eigen::VectorXd col = result.predictive_quantiles.col(i);
            const auto iv = central_interval(col, levels, 0.95);
            row.insert(row.end(), {cell(iv.lo), cell(interpolate_quantile(col, levels, 0.5)), cell(iv.hi)});
        }
        if (truth) row.push_back(cell((*truth)(i)));
        t.add_row(std::move(row));
    }
    t.write(dir / "predictions.csv", manifest_hash);
}

void write_models(const fs::path& dir, const AggregateResult& result, const ModelUniverse& universe,
                  const std::string& manifest_hash) {
    const bool aligned = result.criterion.size() == static_cast<Eigen::Index>(universe.size());
    TableWriter t({"model_index", "model", "size", "star_prob", "criterion", "selected"});
    for (std::size_t k = 0; k < universe.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        t.add_row({std::to_string(k), universe.models[k].to_string(), std::to_string(universe.models[k].count()),
                   cell(result.star_probs(ki)), aligned ? cell(result.criterion(ki)) : "",
                   k == result.selected_index ? "1" : "0"});
    }
    t.write(dir / "models.csv", manifest_hash);
}

void write_selection(const fs::path& dir, const AggregateResult& result, const std::vector<std::string>& coef_names,
                     const std::string& manifest_hash) {
    json j;
    j["manifest_hash"] = manifest_hash;
    j["method"] = to_string(result.method);
    j["strategy"] = to_string(result.strategy);
    j["selected_index"] = result.selected_index;
    j["selected_model"] = result.selected_model.to_string();
    j["chosen_model"] = result.chosen_model ? json(result.chosen_model->to_string()) : json(nullptr);
    j["local_choices"] = result.local_choices;
    json coef = json::object();
    for (Eigen::Index c = 0; c < result.coef_mean.size(); ++c) {
        const auto name = static_cast<std::size_t>(c) < coef_names.size() ? coef_names[static_cast<std::size_t>(c)]
                                                                             : "b" + std::to_string(c);
        coef[name] = result.coef_mean(c);
    }
    j["coefficients"] = coef;
    if (result.coef_quantiles.size() > 0) {
        const auto& levels = default_quantile_levels();
        json iv = json::object();
        for (Eigen::Index c = 0; c < result.coef_quantiles.cols(); ++c) {
            const auto name = static_cast<std::size_t>(c) < coef_names.size()
                                  ? coef_names[static_cast<std::size_t>(c)]
                                  : "b" + std::to_string(c);
            const auto ci = central_interval(result.coef_quantiles.col(c), levels, 0.95);
            iv[name] = {ci.lo, ci.hi};
        }
        j["coefficient_intervals_95"] = iv;
    }
    auto out = open_out(dir / "selection.json");
    out << j.dump(2) << "\n";
}

void write_criteria(const fs::path& path, const std::vector<CriterionVector>& vectors, const ModelUniverse& universe,
                    const std::string& manifest_hash) {
    TableWriter t({"subset_id", "criterion", "model_index", "model", "value"});
    for (const auto& v : vectors)
        for (Eigen::Index k = 0; k < v.values.size(); ++k)
            t.add_row({std::to_string(v.subset_id), to_string(v.kind), std::to_string(k),
                       universe.models.at(static_cast<std::size_t>(k)).to_string(), cell(v.values(k))});
    t.write(path, manifest_hash);
}

void write_records(const fs::path& path, const std::vector<MetricRecord>& records, const std::string& manifest_hash) {
    TableWriter t({"experiment", "method", "strategy", "r", "grid_value", "trial", "rmse", "covered",
                   "selected_correct", "coef_coverage", "interval_lo", "interval_hi", "test_index", "prob_distance",
                   "selected_model", "wall_seconds"});
    for (const auto& m : records)
        t.add_row({m.experiment, to_string(m.method), to_string(m.strategy), std::to_string(m.r), cell(m.grid_value),
                   std::to_string(m.trial), cell(m.rmse), cell_opt(m.covered), cell_opt(m.selected_correct),
                   cell_opt(m.coef_coverage), cell_opt(m.interval_lo), cell_opt(m.interval_hi), cell_opt(m.test_index),
                   cell_opt(m.prob_distance), m.selected_model, cell(m.wall_seconds)});
    t.write(path, manifest_hash);
}

void write_figure(const fs::path& path, const std::vector<FigurePoint>& points, const std::string& manifest_hash) {
    TableWriter t({"series", "x", "y", "band_lo", "band_hi"});
    for (const auto& p : points) t.add_row({p.series, cell(p.x), cell(p.y), cell(p.band_lo), cell(p.band_hi)});
    t.write(path, manifest_hash);
}

void write_assessments(const fs::path& path, const std::vector<Assessment>& items, const std::string& manifest_hash) {
    TableWriter t({"property", "pass", "detail"});
    for (const auto& a : items) t.add_row({a.name, a.pass ? "1" : "0", a.detail});
    t.write(path, manifest_hash);
}

void write_draws(const fs::path& path, const NigPosteriorDraws& draws, const std::vector<std::string>& design_names,
                 const std::string& manifest_hash) {
    std::vector<std::string> cols = {"draw", "sigma2"};
    for (Eigen::Index c = 0; c < draws.beta.cols(); ++c)
        cols.push_back("beta_" + (static_cast<std::size_t>(c) < design_names.size()
                                      ? design_names[static_cast<std::size_t>(c)]
                                      : std::to_string(c)));
    TableWriter t(cols);
    for (Eigen::Index i = 0; i < draws.count(); ++i) {
        std::vector<std::string> row = {std::to_string(i), cell(draws.sigma2(i))};
        for (Eigen::Index c = 0; c < draws.beta.cols(); ++c) row.push_back(cell(draws.beta(i, c)));
        t.add_row(std::move(row));
    }
    t.write(path, manifest_hash, false);
}

void write_ss_trace(const fs::path& path, const SpikeSlabChain& chain, const std::vector<std::string>& names,
                    const std::string& manifest_hash) {
    if (chain.states.empty()) throw ConfigError("write_ss_trace: empty chain");
    const auto d = chain.states.front().beta.size();
    std::vector<std::string> cols = {"sweep", "sigma2_inv", "w"};
    for (Eigen::Index c = 0; c < d; ++c) {
        const auto name = static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                      : std::to_string(c);
        cols.insert(cols.end(), {"beta_" + name, "j_" + name, "tau2_" + name});
    }
    TableWriter t(cols);
    for (std::size_t i = 0; i < chain.states.size(); ++i) {
        const auto& s = chain.states[i];
        std::vector<std::string> row = {std::to_string(i), cell(s.sigma2_inv), cell(s.w)};
        for (Eigen::Index c = 0; c < d; ++c) row.insert(row.end(), {cell(s.beta(c)), cell(s.j(c)), cell(s.tau2(c))});
        t.add_row(std::move(row));
    }
    t.write(path, manifest_hash, false);
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["master_seed"] = m.master_seed;
    j["config"] = m.config;
    j["input_digests"] = m.input_digests;
    j["timestamps"] = {{"started", m.started_utc}, {"finished", m.finished_utc}};
    j["versions"] = {{"medpost", "0.1.0"},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"cxx_standard", __cplusplus}};
    j["outputs"] = m.outputs;
    auto out = open_out(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

}  // namespace medpost
