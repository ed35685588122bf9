#include "medpost/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "medpost/errors.hpp"
#include "medpost/quantiles.hpp"
#include "medpost/rng.hpp"

namespace medpost {

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::contamination: return "contamination";
        case ExperimentKind::magnitude: return "magnitude";
        case ExperimentKind::coverage: return "coverage";
        case ExperimentKind::coef_coverage: return "coef_coverage";
        case ExperimentKind::bigdata: return "bigdata";
        case ExperimentKind::realdata: return "realdata";
        case ExperimentKind::concentration: return "concentration";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
    for (const auto k : {ExperimentKind::contamination, ExperimentKind::magnitude, ExperimentKind::coverage,
                         ExperimentKind::coef_coverage, ExperimentKind::bigdata, ExperimentKind::realdata,
                         ExperimentKind::concentration})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

void ExperimentSpec::validate() const {
    if (trials < 1) throw ConfigError("ExperimentSpec: trials must be at least 1");
    if (methods.empty() || strategies.empty() || r_values.empty() || grid.empty())
        throw ConfigError("ExperimentSpec: methods, strategies, r_values and grid must be nonempty");
    for (const auto r : r_values)
        if (r < 1) throw ConfigError("ExperimentSpec: r values must be at least 1");
    for (const double g : grid)
        if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("ExperimentSpec: grid values must be finite and >= 0");
    if (kind != ExperimentKind::realdata && (n < 2 || d < 1 || n_true > d || n_test < 1 ||
                                             static_cast<Eigen::Index>(n_test) >= n))
        throw ConfigError("ExperimentSpec: invalid synthetic data sizes");
    if (kind == ExperimentKind::coverage && n_test != 1)
        throw ConfigError("ExperimentSpec: the coverage study uses a single held-out point");
    mcmc.validate();
}

ExperimentSpec default_spec(ExperimentKind kind) {
    ExperimentSpec s;
    s.kind = kind;
    s.methods = {Method::bma, Method::aic, Method::bic, Method::median_prob};
    s.strategies = {Strategy::model_combination};
    switch (kind) {
        case ExperimentKind::contamination:
            s.trials = 10;
            s.r_values = {1, 50};
            s.grid = {0, 1, 2, 3, 4, 5};
            break;
        case ExperimentKind::magnitude:
            s.trials = 10;
            s.r_values = {1, 10};
            s.grid = {0, 1e2, 1e3, 1e4, 1e5};
            break;
        case ExperimentKind::coverage:
            s.trials = 50;
            s.methods = {Method::bma};
            s.r_values = {1, 10};
            s.grid = {0, 1e2, 1e3, 1e4, 1e5};
            s.n_test = 1;
            break;
        case ExperimentKind::coef_coverage:
            s.trials = 20;
            s.methods = {Method::bma};
            s.strategies = {Strategy::model_combination, Strategy::estimate_combination};
            s.r_values = {1, 10};
            s.grid = {1e4};
            break;
        case ExperimentKind::bigdata:
            s.trials = 1;
            s.methods = {Method::bma};
            s.n = 100000;
            s.r_values = {1, 10, 50};
            s.grid = {0, 10, 20, 30, 40, 50};
            s.parallelism = 0;
            break;
        case ExperimentKind::realdata:
            s.trials = 1;
            s.methods = {Method::bma};
            s.r_values = {1, 5};
            s.grid = {0};
            s.n_test = 45;
            s.universe = {UniverseKind::all_subsets, 0, {}, std::nullopt};
            s.prior_scale = 1e4;
            s.intercept = true;
            s.data_path = "data/diabetes.csv";
            break;
        case ExperimentKind::concentration:
            s.trials = 50;
            s.methods = {Method::bma};
            s.r_values = {1, 5, 10};
            s.grid = {1e4};
            s.pin_outliers = true;
            break;
    }
    return s;
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() != truth.size() || pred.size() == 0) throw ConfigError("rmse: need equal, nonzero lengths");
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

enum class GridMeaning { counts, magnitudes };

GridMeaning grid_meaning(ExperimentKind k) {
    return (k == ExperimentKind::contamination || k == ExperimentKind::bigdata) ? GridMeaning::counts
                                                                               : GridMeaning::magnitudes;
}

struct TrialData {
    Dataset train;
    Dataset test;
    Eigen::VectorXd beta_true;
    std::vector<std::size_t> outlier_order;  // nested: the first c rows form the c-outlier set
};

TrialData make_trial(const ExperimentSpec& spec, int trial, std::size_t max_outliers) {
    const auto t = static_cast<std::uint64_t>(trial);
    SyntheticSpec ss;
    ss.n = spec.n;
    ss.d = spec.d;
    ss.n_true = spec.n_true;
    ss.noise_sd = spec.noise_sd;
    ss.seed = derive_seed(spec.base_seed, t, 0, SeedPurpose::synthetic);
    SyntheticData syn = generate_synthetic(ss);
    HoldoutSplit split = split_holdout(syn.data, spec.n_test, derive_seed(spec.base_seed, t, 0, SeedPurpose::split));
    TrialData out{std::move(split.train), std::move(split.test), std::move(syn.beta_true), {}};
    Rng rng(derive_seed(spec.base_seed, t, 0, SeedPurpose::outliers));
    out.outlier_order =
        rng.sample_without_replacement(static_cast<std::size_t>(out.train.n()), max_outliers);
    return out;
}

PipelineConfig pipeline_config(const ExperimentSpec& spec, std::size_t r, std::uint64_t master) {
    PipelineConfig cfg;
    cfg.method = spec.methods.front();
    cfg.strategy = spec.strategies.front();
    cfg.r = r;
    cfg.mcmc = spec.mcmc;
    cfg.prior_scale = spec.prior_scale;
    cfg.universe = spec.universe;
    cfg.intercept = spec.intercept;
    cfg.master_seed = master;
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    cfg.parallelism = spec.parallelism == 0 ? std::min(r, static_cast<std::size_t>(hw)) : spec.parallelism;
    cfg.predictions = true;
    cfg.predictive_quantiles = spec.kind == ExperimentKind::coverage || spec.kind == ExperimentKind::realdata;
    cfg.coef_quantiles = spec.kind == ExperimentKind::coef_coverage;
    cfg.spike_slab_chain = std::find(spec.methods.begin(), spec.methods.end(), Method::spike_slab) != spec.methods.end();
    return cfg;
}

ModelSpec true_model_of(const Eigen::VectorXd& beta) {
    std::vector<bool> mask(static_cast<std::size_t>(beta.size()));
    for (Eigen::Index d = 0; d < beta.size(); ++d) mask[static_cast<std::size_t>(d)] = beta(d) != 0.0;
    return ModelSpec(std::move(mask));
}

/// Runs every (method, strategy) pair on one set of subset summaries.
void evaluate(std::vector<MetricRecord>& out, const ExperimentSpec& spec, const SubsetRun& run,
              double summary_seconds, const Dataset& test, const Eigen::VectorXd& beta_true, std::size_t r,
              double grid_value, int trial, const PipelineConfig& cfg) {
    const ModelSpec truth_model = true_model_of(beta_true);
    const auto true_index = run.universe.find(truth_model);
    const auto t0 = Clock::now();
    const Eigen::MatrixXd per_model = aggregate_per_model_predictions(run.summaries, cfg.weiszfeld);
    const double shared_seconds = summary_seconds + seconds_since(t0);
    const auto& levels = default_quantile_levels();

    for (const auto method : spec.methods) {
        for (const auto strategy : spec.strategies) {
            const auto t1 = Clock::now();
            const AggregateResult res = combine(strategy, run.summaries, run.universe, method, cfg.weiszfeld, &per_model);
            MetricRecord rec;
            rec.experiment = to_string(spec.kind);
            rec.method = method;
            rec.strategy = strategy;
            rec.r = r;
            rec.grid_value = grid_value;
            rec.trial = trial;
            rec.rmse = rmse(res.final_prediction, test.y());
            rec.selected_model = res.selected_model.to_string();
            if (true_index) {
                rec.selected_correct = res.selected_index == *true_index;
                Eigen::VectorXd e = Eigen::VectorXd::Zero(res.star_probs.size());
                e(static_cast<Eigen::Index>(*true_index)) = 1.0;
                rec.prob_distance = (res.star_probs - e).norm();
            }
            if (res.predictive_quantiles.size() > 0) {
                const Interval iv = central_interval(res.predictive_quantiles.col(0), levels);
                rec.covered = iv.contains(test.y()(0));
                rec.interval_lo = iv.lo;
                rec.interval_hi = iv.hi;
            }
            if (res.coef_quantiles.size() > 0) {
                const auto cols = design_columns(res.selected_model, cfg.intercept);
                int hits = 0, total = 0;
                for (Eigen::Index d = 0; d < beta_true.size(); ++d) {
                    if (beta_true(d) == 0.0) continue;
                    ++total;
                    const auto pos = std::find(cols.begin(), cols.end(), d + (cfg.intercept ? 1 : 0));
                    if (pos == cols.end()) continue;
                    const Interval iv =
                        central_interval(res.coef_quantiles.col(static_cast<Eigen::Index>(pos - cols.begin())), levels);
                    if (iv.contains(beta_true(d))) ++hits;
                }
                if (total > 0) rec.coef_coverage = static_cast<double>(hits) / total;
            }
            rec.wall_seconds = shared_seconds + seconds_since(t1);
            out.push_back(std::move(rec));
        }
    }
}

std::vector<MetricRecord> run_synthetic(const ExperimentSpec& spec) {
    spec.validate();
    const GridMeaning meaning = grid_meaning(spec.kind);
    std::size_t max_outliers = spec.outliers;
    if (meaning == GridMeaning::counts)
        max_outliers = static_cast<std::size_t>(*std::max_element(spec.grid.begin(), spec.grid.end()));

    std::vector<MetricRecord> out;
    for (int t = 0; t < spec.trials; ++t) {
        const TrialData data = make_trial(spec, t, spec.pin_outliers ? 0 : max_outliers);
        for (const auto r : spec.r_values) {
            // Same master seed across the grid: common random numbers for every contamination level.
            const std::uint64_t master = derive_seed(spec.base_seed, static_cast<std::uint64_t>(t), r, SeedPurpose::experiment);
            const PipelineConfig cfg = pipeline_config(spec, r, master);
            std::vector<std::size_t> pinned;
            if (spec.pin_outliers) {
                const Partition part = partition(data.train, r, derive_seed(master, 0, 0, SeedPurpose::partition));
                const std::size_t subset0[] = {0};
                pinned = rows_in_subsets(part, subset0, max_outliers);
            }
            const auto& order = spec.pin_outliers ? pinned : data.outlier_order;
            for (const double g : spec.grid) {
                OutlierPlan plan;
                plan.count = meaning == GridMeaning::counts ? static_cast<std::size_t>(g) : spec.outliers;
                plan.magnitude = meaning == GridMeaning::counts ? spec.magnitude : g;
                plan.target_indices = std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(plan.count));
                const Dataset train = plan.count > 0 ? inject_outliers(data.train, plan, 0) : data.train;
                const auto t0 = Clock::now();
                const SubsetRun run = compute_subset_summaries(train, data.test.x(), cfg);
                evaluate(out, spec, run, seconds_since(t0), data.test, data.beta_true, r, g, t, cfg);
            }
        }
    }
    return out;
}

}  // namespace

std::vector<MetricRecord> run_contamination(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::contamination) throw ConfigError("run_contamination: wrong spec kind");
    return run_synthetic(spec);
}

std::vector<MetricRecord> run_magnitude(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::magnitude) throw ConfigError("run_magnitude: wrong spec kind");
    return run_synthetic(spec);
}

std::vector<MetricRecord> run_coverage(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::coverage) throw ConfigError("run_coverage: wrong spec kind");
    return run_synthetic(spec);
}

std::vector<MetricRecord> run_coef_coverage(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::coef_coverage) throw ConfigError("run_coef_coverage: wrong spec kind");
    return run_synthetic(spec);
}

std::vector<MetricRecord> run_bigdata(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::bigdata) throw ConfigError("run_bigdata: wrong spec kind");
    return run_synthetic(spec);
}

std::vector<MetricRecord> run_concentration(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::concentration) throw ConfigError("run_concentration: wrong spec kind");
    return run_synthetic(spec);
}

std::vector<MetricRecord> run_realdata(const ExperimentSpec& spec, const Dataset& ds) {
    if (spec.kind != ExperimentKind::realdata) throw ConfigError("run_realdata: wrong spec kind");
    if (spec.trials < 1 || spec.methods.empty() || spec.strategies.empty() || spec.r_values.empty())
        throw ConfigError("run_realdata: trials, methods, strategies and r_values must be set");
    spec.mcmc.validate();
    const Dataset scaled = standardize(ds);
    const auto& levels = default_quantile_levels();
    std::vector<MetricRecord> out;
    for (int t = 0; t < spec.trials; ++t) {
        const auto tt = static_cast<std::uint64_t>(t);
        const HoldoutSplit split = split_holdout(scaled, spec.n_test, derive_seed(spec.base_seed, tt, 0, SeedPurpose::split));
        for (const auto r : spec.r_values) {
            const std::uint64_t master = derive_seed(spec.base_seed, tt, r, SeedPurpose::experiment);
            const PipelineConfig cfg = pipeline_config(spec, r, master);
            const auto t0 = Clock::now();
            const SubsetRun run = compute_subset_summaries(split.train, split.test.x(), cfg);
            const double summary_seconds = seconds_since(t0);
            for (const auto method : spec.methods) {
                for (const auto strategy : spec.strategies) {
                    const auto t1 = Clock::now();
                    const AggregateResult res = combine(strategy, run.summaries, run.universe, method, cfg.weiszfeld);
                    const double secs = summary_seconds + seconds_since(t1);
                    for (Eigen::Index i = 0; i < split.test.n(); ++i) {
                        const double truth = split.test.y()(i);
                        const Interval iv = central_interval(res.predictive_quantiles.col(i), levels);
                        MetricRecord rec;
                        rec.experiment = to_string(spec.kind);
                        rec.method = method;
                        rec.strategy = strategy;
                        rec.r = r;
                        rec.grid_value = 0.0;
                        rec.trial = t;
                        rec.rmse = std::abs(res.final_prediction(i) - truth);
                        rec.covered = iv.contains(truth);
                        rec.interval_lo = iv.lo - truth;
                        rec.interval_hi = iv.hi - truth;
                        rec.test_index = static_cast<int>(split.test_indices[static_cast<std::size_t>(i)]);
                        rec.selected_model = res.selected_model.to_string();
                        rec.wall_seconds = secs;
                        out.push_back(std::move(rec));
                    }
                }
            }
        }
    }
    return out;
}

std::vector<MetricRecord> run_experiment(const ExperimentSpec& spec) {
    switch (spec.kind) {
        case ExperimentKind::contamination: return run_contamination(spec);
        case ExperimentKind::magnitude: return run_magnitude(spec);
        case ExperimentKind::coverage: return run_coverage(spec);
        case ExperimentKind::coef_coverage: return run_coef_coverage(spec);
        case ExperimentKind::bigdata: return run_bigdata(spec);
        case ExperimentKind::concentration: return run_concentration(spec);
        case ExperimentKind::realdata: return run_realdata(spec, load_csv(spec.data_path, spec.response_column));
    }
    throw ConfigError("run_experiment: unknown kind");
}

Band band(std::vector<double> values) {
    if (values.empty()) throw ConfigError("band: no values");
    std::sort(values.begin(), values.end());
    Band b;
    b.count = values.size();
    double sum = 0.0;
    for (const double v : values) sum += v;
    b.mean = sum / static_cast<double>(values.size());
    b.lo = sorted_quantile(values, 0.025);
    b.hi = sorted_quantile(values, 0.975);
    return b;
}

namespace {

std::string series_name(const MetricRecord& r) {
    return to_string(r.method) + "/" + (r.strategy == Strategy::model_combination ? "model" : "estimate") +
           "/r=" + std::to_string(r.r);
}

using SeriesKey = std::tuple<std::string, double>;

template <typename Value>
std::map<SeriesKey, std::vector<double>> group_values(const std::vector<MetricRecord>& records, Value&& value) {
    std::map<SeriesKey, std::vector<double>> groups;
    for (const auto& r : records) {
        if (const auto v = value(r)) groups[{series_name(r), r.grid_value}].push_back(*v);
    }
    return groups;
}

FigurePoint proportion_point(const std::string& series, double x, const std::vector<double>& hits) {
    const double n = static_cast<double>(hits.size());
    double p = 0.0;
    for (const double h : hits) p += h;
    p /= n;
    const double half = 1.96 * std::sqrt(p * (1.0 - p) / n);
    return {series, x, p, std::max(0.0, p - half), std::min(1.0, p + half)};
}

std::vector<const MetricRecord*> select(const std::vector<MetricRecord>& records, Method m, Strategy s,
                                        std::size_t r) {
    std::vector<const MetricRecord*> out;
    for (const auto& rec : records)
        if (rec.method == m && rec.strategy == s && rec.r == r) out.push_back(&rec);
    return out;
}

std::vector<double> rmse_at(const std::vector<const MetricRecord*>& recs, double g) {
    std::vector<double> v;
    for (const auto* r : recs)
        if (r->grid_value == g) v.push_back(r->rmse);
    return v;
}

double rate(const std::vector<const MetricRecord*>& recs, double g, const std::function<bool(const MetricRecord&)>& hit) {
    double hits = 0.0, total = 0.0;
    for (const auto* r : recs) {
        if (r->grid_value != g) continue;
        total += 1.0;
        if (hit(*r)) hits += 1.0;
    }
    return total > 0.0 ? hits / total : std::nan("");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

}  // namespace

std::vector<FigurePoint> figure_data(ExperimentKind kind, const std::vector<MetricRecord>& records) {
    std::vector<FigurePoint> out;
    switch (kind) {
        case ExperimentKind::contamination:
        case ExperimentKind::magnitude:
        case ExperimentKind::bigdata:
            for (const auto& [key, vals] : group_values(records, [](const MetricRecord& r) { return std::optional<double>(r.rmse); })) {
                const Band b = band(vals);
                out.push_back({std::get<0>(key), std::get<1>(key), b.mean, b.lo, b.hi});
            }
            break;
        case ExperimentKind::coverage:
            for (const auto& [key, vals] : group_values(records, [](const MetricRecord& r) {
                     return r.covered ? std::optional<double>(*r.covered ? 1.0 : 0.0) : std::nullopt;
                 }))
                out.push_back(proportion_point(std::get<0>(key), std::get<1>(key), vals));
            break;
        case ExperimentKind::coef_coverage: {
            std::map<std::string, std::vector<double>> correct, cover;
            std::map<std::string, double> xs;
            for (const auto& r : records) {
                const std::string s = to_string(r.method) + "/" + to_string(r.strategy);
                if (r.selected_correct) correct[s + "/correct/r=" + std::to_string(r.r)].push_back(*r.selected_correct ? 1.0 : 0.0);
                if (r.coef_coverage) cover[s + "/coef_coverage/r=" + std::to_string(r.r)].push_back(*r.coef_coverage);
                xs[s + "/correct/r=" + std::to_string(r.r)] = static_cast<double>(r.r);
                xs[s + "/coef_coverage/r=" + std::to_string(r.r)] = static_cast<double>(r.r);
            }
            for (const auto& [s, v] : correct) out.push_back(proportion_point(s, xs[s], v));
            for (const auto& [s, v] : cover) out.push_back(proportion_point(s, xs[s], v));
            break;
        }
        case ExperimentKind::realdata:
            for (const auto& r : records) {
                if (!r.interval_lo || !r.test_index) continue;
                out.push_back({series_name(r), static_cast<double>(*r.test_index), 0.5 * (*r.interval_lo + *r.interval_hi),
                               *r.interval_lo, *r.interval_hi});
            }
            break;
        case ExperimentKind::concentration:
            for (const auto& [key, vals] : group_values(records, [](const MetricRecord& r) { return r.prob_distance; })) {
                const Band b = band(vals);
                out.push_back({std::get<0>(key), std::get<1>(key), b.mean, b.lo, b.hi});
            }
            break;
    }
    return out;
}

std::vector<Assessment> assess(const ExperimentSpec& spec, const std::vector<MetricRecord>& records) {
    std::vector<Assessment> out;
    const std::size_t r_hi = *std::max_element(spec.r_values.begin(), spec.r_values.end());
    const std::size_t r_lo = *std::min_element(spec.r_values.begin(), spec.r_values.end());
    const double g_min = *std::min_element(spec.grid.begin(), spec.grid.end());
    const double g_max = *std::max_element(spec.grid.begin(), spec.grid.end());
    const Strategy s0 = spec.strategies.front();

    switch (spec.kind) {
        case ExperimentKind::contamination: {
            for (const auto m : spec.methods) {
                const auto lo_recs = select(records, m, s0, r_lo);
                const auto hi_recs = select(records, m, s0, r_hi);
                bool pass = true;
                std::string detail;
                for (const double g : spec.grid) {
                    const Band a = band(rmse_at(lo_recs, g));
                    const Band b = band(rmse_at(hi_recs, g));
                    detail += "n_out=" + fmt(g) + ": r" + std::to_string(r_hi) + " hi " + fmt(b.hi) + " vs r" +
                              std::to_string(r_lo) + " lo " + fmt(a.lo) + "; ";
                    if (g >= 1.0 && !(b.hi < a.lo)) pass = false;
                }
                out.push_back({"contamination/" + to_string(m), pass, detail});
            }
            break;
        }
        case ExperimentKind::magnitude: {
            for (const auto m : spec.methods) {
                const auto hi_recs = select(records, m, s0, r_hi);
                const auto lo_recs = select(records, m, s0, r_lo);
                double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
                for (const double g : spec.grid) {
                    const double mean = band(rmse_at(hi_recs, g)).mean;
                    mn = std::min(mn, mean);
                    mx = std::max(mx, mean);
                }
                const double variation = mx / mn - 1.0;
                out.push_back({"magnitude_invariance/" + to_string(m) + "/r=" + std::to_string(r_hi), variation < 0.25,
                               "relative variation " + fmt(variation) + " (limit 0.25)"});
                const double clean = band(rmse_at(lo_recs, g_min)).mean;
                const double worst = band(rmse_at(lo_recs, g_max)).mean;
                out.push_back({"magnitude_growth/" + to_string(m) + "/r=" + std::to_string(r_lo), worst > 5.0 * clean,
                               "rmse " + fmt(worst) + " at " + fmt(g_max) + " vs " + fmt(clean) + " at " + fmt(g_min)});
            }
            break;
        }
        case ExperimentKind::coverage: {
            const auto covered = [](const MetricRecord& r) { return r.covered.value_or(false); };
            for (const auto m : spec.methods) {
                const auto hi_recs = select(records, m, s0, r_hi);
                const auto lo_recs = select(records, m, s0, r_lo);
                bool pass = true;
                std::string detail;
                for (const double g : spec.grid) {
                    const double c = rate(hi_recs, g, covered);
                    detail += fmt(g) + ":" + fmt(c) + " ";
                    if (!(c >= 0.85 && c <= 1.0)) pass = false;
                }
                out.push_back({"coverage/r=" + std::to_string(r_hi), pass, detail});
                const double at_clean = rate(lo_recs, g_min, covered);
                out.push_back({"coverage_clean/r=" + std::to_string(r_lo), at_clean >= 0.85,
                               "coverage " + fmt(at_clean) + " at magnitude " + fmt(g_min)});
                const double target = std::find(spec.grid.begin(), spec.grid.end(), 1e4) != spec.grid.end() ? 1e4 : g_max;
                const double at_target = rate(lo_recs, target, covered);
                out.push_back({"coverage_degrades/r=" + std::to_string(r_lo), at_target < 0.2,
                               "coverage " + fmt(at_target) + " at magnitude " + fmt(target) + " (limit < 0.2)"});
            }
            break;
        }
        case ExperimentKind::coef_coverage: {
            const auto correct = [](const MetricRecord& r) { return r.selected_correct.value_or(false); };
            const Method m = spec.methods.front();
            for (const auto s : spec.strategies) {
                const double hi = rate(select(records, m, s, r_hi), spec.grid.front(), correct);
                const double lo = rate(select(records, m, s, r_lo), spec.grid.front(), correct);
                out.push_back({"model_recovery/" + to_string(s) + "/r=" + std::to_string(r_hi), hi >= 0.9,
                               "correct rate " + fmt(hi)});
                out.push_back({"model_recovery_gap/" + to_string(s), lo < hi,
                               "r=" + std::to_string(r_lo) + " rate " + fmt(lo) + " vs r=" + std::to_string(r_hi) +
                                   " rate " + fmt(hi)});
            }
            if (spec.strategies.size() >= 2) {
                const auto a = select(records, m, spec.strategies[0], r_hi);
                const auto b = select(records, m, spec.strategies[1], r_hi);
                double agree = 0.0;
                const std::size_t n = std::min(a.size(), b.size());
                for (std::size_t i = 0; i < n; ++i)
                    if (a[i]->selected_model == b[i]->selected_model) agree += 1.0;
                const double share = n > 0 ? agree / static_cast<double>(n) : 0.0;
                out.push_back({"strategy_agreement/r=" + std::to_string(r_hi), share >= 0.8, "agreement " + fmt(share)});
            }
            break;
        }
        case ExperimentKind::bigdata: {
            const Method m = spec.methods.front();
            const auto hi_recs = select(records, m, s0, r_hi);
            const double clean = band(rmse_at(hi_recs, g_min)).mean;
            bool pass = true;
            std::string detail;
            for (const double g : spec.grid) {
                if (g > 30.0) continue;
                const double v = band(rmse_at(hi_recs, g)).mean;
                detail += fmt(g) + ":" + fmt(v) + " ";
                if (!(v <= 2.0 * clean)) pass = false;
            }
            out.push_back({"bigdata_robust/r=" + std::to_string(r_hi), pass, detail + "(clean " + fmt(clean) + ")"});
            const double worst_hi = band(rmse_at(hi_recs, g_max)).mean;
            const double worst_lo = band(rmse_at(select(records, m, s0, r_lo), g_max)).mean;
            out.push_back({"bigdata_degradation_bounded", worst_hi < worst_lo,
                           "r=" + std::to_string(r_hi) + " " + fmt(worst_hi) + " vs r=" + std::to_string(r_lo) + " " + fmt(worst_lo)});
            std::vector<std::size_t> rs = spec.r_values;
            std::sort(rs.begin(), rs.end());
            bool decreasing = true;
            std::string times;
            double prev = std::numeric_limits<double>::infinity();
            for (const auto r : rs) {
                std::vector<double> secs;
                for (const auto* rec : select(records, m, s0, r))
                    if (rec->grid_value == g_min) secs.push_back(rec->wall_seconds);
                const double t = band(secs).mean;
                times += "r=" + std::to_string(r) + ":" + fmt(t) + "s ";
                if (!(t < prev)) decreasing = false;
                prev = t;
            }
            out.push_back({"scaling_order", decreasing, times});
            break;
        }
        case ExperimentKind::realdata: {
            const Method m = spec.methods.front();
            const auto width = [](const std::vector<const MetricRecord*>& recs) {
                double w = 0.0;
                for (const auto* r : recs) w += *r->interval_hi - *r->interval_lo;
                return recs.empty() ? std::nan("") : w / static_cast<double>(recs.size());
            };
            const auto hi_recs = select(records, m, s0, r_hi);
            const auto lo_recs = select(records, m, s0, r_lo);
            const double w_hi = width(hi_recs), w_lo = width(lo_recs);
            out.push_back({"realdata_width", w_hi <= w_lo,
                           "mean width r=" + std::to_string(r_hi) + " " + fmt(w_hi) + " vs r=" + std::to_string(r_lo) + " " + fmt(w_lo)});
            const double c = rate(hi_recs, 0.0, [](const MetricRecord& r) { return r.covered.value_or(false); });
            out.push_back({"realdata_centered/r=" + std::to_string(r_hi), c >= 0.85, "share containing 0: " + fmt(c)});
            break;
        }
        case ExperimentKind::concentration: {
            const Method m = spec.methods.front();
            std::vector<std::size_t> rs = spec.r_values;
            std::sort(rs.begin(), rs.end());
            std::vector<double> rates;
            std::string detail;
            for (const auto r : rs) {
                const double v = rate(select(records, m, s0, r), spec.grid.front(),
                                      [](const MetricRecord& rec) { return rec.prob_distance.value_or(2.0) > 0.1; });
                rates.push_back(v);
                detail += "r=" + std::to_string(r) + ":" + fmt(v) + " ";
            }
            bool monotone = true;
            for (std::size_t i = 1; i < rates.size(); ++i)
                if (rates[i] > rates[i - 1]) monotone = false;
            out.push_back({"concentration", monotone && rates.back() < rates.front(), detail});
            break;
        }
    }
    return out;
}

}  // namespace medpost
