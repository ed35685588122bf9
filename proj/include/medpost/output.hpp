#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "medpost/conjugate.hpp"
#include "medpost/experiments.hpp"
#include "medpost/spikeslab.hpp"
#include "medpost/summary.hpp"

namespace medpost {

/// Shortest round-trip decimal form of v ("nan", "inf", "-inf" for specials).
std::string format_double(double v);

/// A CSV whose first line is "# manifest_hash=<hash>", followed by a header
/// and rows. A JSONL mirror (one object per row, same keys) is written next
/// to it when `jsonl` is set.
class TableWriter {
public:
    explicit TableWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<std::string> cells);
    std::size_t rows() const noexcept { return rows_.size(); }

    void write(const std::filesystem::path& csv_path, const std::string& manifest_hash, bool jsonl = true) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// predictions.csv: per test point the final prediction and, when
/// available, the 2.5% / 50% / 97.5% predictive quantiles and the truth.
void write_predictions(const std::filesystem::path& dir, const AggregateResult& result,
                       const std::vector<std::size_t>& test_rows, const Eigen::VectorXd* truth,
                       const std::string& manifest_hash);

/// models.csv: per universe model its aggregated probability and criterion.
void write_models(const std::filesystem::path& dir, const AggregateResult& result, const ModelUniverse& universe,
                  const std::string& manifest_hash);

/// selection.json: method, strategy, selected model and coefficients.
/// `coef_names` label the selected model's design columns.
void write_selection(const std::filesystem::path& dir, const AggregateResult& result,
                     const std::vector<std::string>& coef_names, const std::string& manifest_hash);

/// subset_criteria.csv: long form (subset, criterion, model, value).
void write_criteria(const std::filesystem::path& path, const std::vector<CriterionVector>& vectors,
                    const ModelUniverse& universe, const std::string& manifest_hash);

void write_records(const std::filesystem::path& path, const std::vector<MetricRecord>& records,
                   const std::string& manifest_hash);
void write_figure(const std::filesystem::path& path, const std::vector<FigurePoint>& points,
                  const std::string& manifest_hash);
void write_assessments(const std::filesystem::path& path, const std::vector<Assessment>& items,
                       const std::string& manifest_hash);

/// One row per retained draw: sigma2 then beta columns.
void write_draws(const std::filesystem::path& path, const NigPosteriorDraws& draws,
                 const std::vector<std::string>& design_names, const std::string& manifest_hash);
/// One row per retained sweep: sigma2_inv, w, then beta_d, j_d, tau2_d.
void write_ss_trace(const std::filesystem::path& path, const SpikeSlabChain& chain,
                    const std::vector<std::string>& names, const std::string& manifest_hash);

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::map<std::string, std::string> config;      // canonical key/value pairs
    std::map<std::string, std::string> input_digests;
    std::string started_utc;
    std::string finished_utc;
    std::vector<std::string> outputs;
};

std::string utc_timestamp();
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

}  // namespace medpost
