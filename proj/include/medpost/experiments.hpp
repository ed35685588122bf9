#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "medpost/engine.hpp"

namespace medpost {

enum class ExperimentKind { contamination, magnitude, coverage, coef_coverage, bigdata, realdata, concentration };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::contamination;
    int trials = 10;
    std::vector<Method> methods;
    std::vector<Strategy> strategies;
    std::vector<std::size_t> r_values;
    std::vector<double> grid;  // outlier counts or magnitudes, depending on kind

    // Synthetic data (all kinds but realdata).
    Eigen::Index n = 5000;
    Eigen::Index d = 10;
    Eigen::Index n_true = 3;
    double noise_sd = 1.0;
    double magnitude = 1e4;      // outlier magnitude when the grid holds counts
    std::size_t outliers = 1;    // outlier count when the grid holds magnitudes
    bool pin_outliers = false;   // put every outlier into subset 0
    std::size_t n_test = 50;

    std::uint64_t base_seed = 1;
    McmcConfig mcmc;
    std::size_t parallelism = 1;  // 0: one worker per subset, capped by hardware threads
    UniverseSpec universe{UniverseKind::fixed_size, 3, {}, std::nullopt};
    double prior_scale = 100.0;
    bool intercept = false;

    // Real data.
    std::filesystem::path data_path;
    std::string response_column = "y";

    void validate() const;
};

/// Defaults for each study (sizes, grids, r values, methods).
ExperimentSpec default_spec(ExperimentKind kind);

struct MetricRecord {
    std::string experiment;
    Method method = Method::bma;
    Strategy strategy = Strategy::model_combination;
    std::size_t r = 1;
    double grid_value = 0.0;
    int trial = 0;
    double rmse = 0.0;
    std::optional<bool> covered;
    std::optional<bool> selected_correct;
    std::optional<double> coef_coverage;  // share of true coefficients inside their 95% interval
    std::optional<double> interval_lo;
    std::optional<double> interval_hi;
    std::optional<int> test_index;
    std::optional<double> prob_distance;  // |Pr_* - e_true|
    std::string selected_model;
    double wall_seconds = 0.0;
};

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

std::vector<MetricRecord> run_contamination(const ExperimentSpec& spec);
std::vector<MetricRecord> run_magnitude(const ExperimentSpec& spec);
std::vector<MetricRecord> run_coverage(const ExperimentSpec& spec);
std::vector<MetricRecord> run_coef_coverage(const ExperimentSpec& spec);
std::vector<MetricRecord> run_bigdata(const ExperimentSpec& spec);
std::vector<MetricRecord> run_realdata(const ExperimentSpec& spec, const Dataset& ds);
/// Distance of the aggregated model probabilities to the true model's
/// indicator when a single subset carries the contamination.
std::vector<MetricRecord> run_concentration(const ExperimentSpec& spec);

/// Dispatches on spec.kind; realdata loads spec.data_path.
std::vector<MetricRecord> run_experiment(const ExperimentSpec& spec);

/// Mean and empirical 2.5% / 97.5% quantiles.
struct Band {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};
Band band(std::vector<double> values);

struct FigurePoint {
    std::string series;
    double x = 0.0;
    double y = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
};

/// Plot data for the study's figure family.
std::vector<FigurePoint> figure_data(ExperimentKind kind, const std::vector<MetricRecord>& records);

struct Assessment {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// The study's pass/fail properties evaluated on its records.
std::vector<Assessment> assess(const ExperimentSpec& spec, const std::vector<MetricRecord>& records);

}  // namespace medpost
