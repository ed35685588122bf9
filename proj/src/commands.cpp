#include "medpost/commands.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <json.hpp>

#include "medpost/errors.hpp"
#include "medpost/output.hpp"

namespace medpost {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    if (dynamic_cast<const NumericError*>(&e)) return 4;
    return 1;
}

std::string error_line(const std::exception& e) {
    static const char* kinds[] = {"ok", "internal", "config", "data", "numeric"};
    std::string msg = e.what();
    for (auto& c : msg)
        if (c == '\n' || c == '\r') c = ' ';
    return std::string("error kind=") + kinds[exit_code_for(e)] + " message=" + msg;
}

KeyValueConfig resolve_config(const CommandFlags& flags, const std::string& command) {
    KeyValueConfig cfg = flags.config ? KeyValueConfig::load(*flags.config) : KeyValueConfig{};
    if (flags.seed) cfg.set("seed", std::to_string(*flags.seed));
    if (flags.parallelism) cfg.set("parallelism", std::to_string(*flags.parallelism));
    if (flags.out_dir) cfg.set("out_dir", flags.out_dir->string());
    if (command == "fit") {
        if (flags.subsets) cfg.set("r", std::to_string(*flags.subsets));
        if (flags.method) cfg.set("method", *flags.method);
        if (flags.strategy) cfg.set("strategy", *flags.strategy);
        if (flags.data) cfg.set("data", flags.data->string());
    } else if (command == "experiment") {
        if (flags.subsets) cfg.set("r_values", std::to_string(*flags.subsets));
        if (flags.method) cfg.set("methods", *flags.method);
        if (flags.strategy) cfg.set("strategies", *flags.strategy);
        if (flags.trials) cfg.set("trials", std::to_string(*flags.trials));
        if (flags.kind) cfg.set("kind", *flags.kind);
        if (flags.data) cfg.set("data", flags.data->string());
    }
    return cfg;
}

namespace {

// Output files depend on everything but where they are written.
const std::vector<std::string> kHashExclude = {"out_dir"};

RunManifest start_manifest(const std::string& command, const KeyValueConfig& cfg) {
    RunManifest m;
    m.command = command;
    m.config_hash = hex64(cfg.hash(kHashExclude));
    m.master_seed = cfg.get_uint("seed", 0);
    for (const auto& [k, v] : cfg.values())
        if (k != "out_dir") m.config[k] = v;
    m.started_utc = utc_timestamp();
    return m;
}

void finish_manifest(const fs::path& dir, RunManifest& m) {
    m.finished_utc = utc_timestamp();
    write_manifest(dir, m);
    std::cout << "manifest_hash=" << m.config_hash << " out_dir=" << dir.string() << "\n";
}

fs::path out_dir_of(const KeyValueConfig& cfg) {
    const fs::path dir = cfg.get("out_dir", "out");
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> design_names(const Dataset& ds, bool intercept) {
    std::vector<std::string> names;
    if (intercept) names.push_back("intercept");
    for (Eigen::Index j = 0; j < ds.d(); ++j)
        names.push_back(static_cast<std::size_t>(j) < ds.column_names().size() ? ds.column_names()[static_cast<std::size_t>(j)]
                                                                               : "x" + std::to_string(j + 1));
    return names;
}

}  // namespace

void cmd_fit(const CommandFlags& flags) {
    const KeyValueConfig cfg = resolve_config(flags, "fit");
    cfg.require_known(fit_config_keys());
    if (!cfg.has("data")) throw ConfigError("fit: no data file (set data = path or pass --data)");
    const PipelineConfig pipeline = pipeline_from_config(cfg);
    RunManifest manifest = start_manifest("fit", cfg);
    const fs::path dir = out_dir_of(cfg);

    const std::string response = cfg.get("response", "y");
    const fs::path data_path = cfg.get("data", "");
    Dataset all = load_csv(data_path, response);
    manifest.input_digests[data_path.string()] = file_digest(data_path);
    const bool standardize_x = cfg.get_bool("standardize", false);
    if (standardize_x) all = standardize(all);

    Dataset train = all;
    Eigen::MatrixXd x_test(0, all.d());
    std::optional<Eigen::VectorXd> truth;
    std::vector<std::size_t> test_rows;
    if (cfg.has("test_data")) {
        const fs::path test_path = cfg.get("test_data", "");
        Dataset test = load_csv(test_path, response);
        manifest.input_digests[test_path.string()] = file_digest(test_path);
        if (test.d() != all.d()) throw DataError("fit: test data has a different number of predictors");
        if (standardize_x) throw ConfigError("fit: standardize cannot be combined with test_data");
        x_test = test.x();
        truth = test.y();
        for (Eigen::Index i = 0; i < test.n(); ++i) test_rows.push_back(static_cast<std::size_t>(i));
    } else if (const auto n_test = cfg.get_uint("n_test", 0); n_test > 0) {
        HoldoutSplit split = split_holdout(all, n_test, derive_seed(pipeline.master_seed, 0, 0, SeedPurpose::split));
        train = std::move(split.train);
        x_test = split.test.x();
        truth = split.test.y();
        test_rows = split.test_indices;
    }

    const SubsetRun run = compute_subset_summaries(train, x_test, pipeline);
    const AggregateResult result = combine(pipeline.strategy, run.summaries, run.universe, pipeline.method,
                                           pipeline.weiszfeld);
    const std::string& hash = manifest.config_hash;
    const auto names = design_names(all, pipeline.intercept);

    if (x_test.rows() > 0) {
        write_predictions(dir, result, test_rows, truth ? &*truth : nullptr, hash);
        manifest.outputs.push_back("predictions.csv");
    }
    write_models(dir, result, run.universe, hash);
    std::vector<std::string> coef_names;
    for (const auto c : design_columns(result.selected_model, pipeline.intercept))
        coef_names.push_back(names[static_cast<std::size_t>(c)]);
    write_selection(dir, result, coef_names, hash);
    std::vector<CriterionVector> vectors;
    for (const auto& s : run.summaries) vectors.insert(vectors.end(), {s.probs, s.aic, s.bic});
    write_criteria(dir / "subset_criteria.csv", vectors, run.universe, hash);
    manifest.outputs.insert(manifest.outputs.end(), {"models.csv", "selection.json", "subset_criteria.csv"});

    if (cfg.get_bool("trace", false)) {
        // Subset 0's chains, reproduced with the seeds the pipeline used.
        const auto& rows = run.partition.members.front();
        const Eigen::MatrixXd xs = train.x()(rows, Eigen::all);
        const Eigen::VectorXd ys = train.y()(rows);
        const PowerLikelihoodConfig pl{pipeline.effective_r_power()};
        const Eigen::MatrixXd z = design_matrix(xs, pipeline.intercept);
        const auto k = result.selected_index;
        const auto cols = design_columns(run.universe.models[k], pipeline.intercept);
        McmcConfig mc = pipeline.mcmc;
        mc.seed = derive_seed(pipeline.master_seed, 0, k, SeedPurpose::mcmc);
        const auto draws = sample_posterior(GramStats::from(z, ys).restrict(cols), run.universe.models[k],
                                            pipeline.resolved_prior(z.cols()).restrict(cols), pl, mc);
        std::vector<std::string> sel_names;
        for (const auto c : cols) sel_names.push_back(names[static_cast<std::size_t>(c)]);
        write_draws(dir / "draws_subset0.csv", draws, sel_names, hash);
        manifest.outputs.push_back("draws_subset0.csv");
        if (pipeline.needs_spike_slab()) {
            McmcConfig ss = pipeline.mcmc;
            ss.seed = derive_seed(pipeline.master_seed, 0, 0, SeedPurpose::spike_slab);
            Eigen::MatrixXd xc = xs;
            Eigen::VectorXd yc = ys;
            if (pipeline.intercept) {
                xc.rowwise() -= xc.colwise().mean();
                yc.array() -= yc.mean();
            }
            std::optional<double> global;
            if (pipeline.ss_basis == ScaleBasis::global) global = full_model_sigma_hat2(train, pipeline.intercept);
            const auto chain = ss_run_chain(xc, yc, pipeline.ss_prior, pl, ss, pipeline.ss_basis, global);
            write_ss_trace(dir / "ss_trace_subset0.csv", chain, all.column_names(), hash);
            manifest.outputs.push_back("ss_trace_subset0.csv");
        }
    }
    finish_manifest(dir, manifest);
}

void cmd_experiment(const CommandFlags& flags) {
    const KeyValueConfig cfg = resolve_config(flags, "experiment");
    cfg.require_known(experiment_config_keys());
    if (!cfg.has("kind")) throw ConfigError("experiment: no kind (set kind = ... or pass --kind)");
    const ExperimentKind kind = parse_experiment_kind(cfg.get("kind", ""));
    const ExperimentSpec spec = experiment_from_config(kind, cfg);
    RunManifest manifest = start_manifest("experiment", cfg);
    if (kind == ExperimentKind::realdata)
        manifest.input_digests[spec.data_path.string()] = file_digest(spec.data_path);
    const fs::path dir = out_dir_of(cfg);

    const auto records = run_experiment(spec);
    const auto& hash = manifest.config_hash;
    write_records(dir / "records.csv", records, hash);
    write_figure(dir / "figure.csv", figure_data(kind, records), hash);
    const auto verdicts = assess(spec, records);
    write_assessments(dir / "assessment.csv", verdicts, hash);
    manifest.outputs = {"records.csv", "records.jsonl", "figure.csv", "figure.jsonl", "assessment.csv",
                        "assessment.jsonl"};
    for (const auto& a : verdicts) std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.detail << "\n";
    finish_manifest(dir, manifest);
}

namespace {

// Numeric rows of a CSV, skipping '#' comments and a non-numeric header.
Eigen::MatrixXd read_matrix(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        bool numeric = true;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(field, &used);
                if (field.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (header_allowed) {
                header_allowed = false;
                continue;
            }
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric row");
        }
        header_allowed = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path.string() + ": no numeric rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace

void cmd_aggregate(const CommandFlags& flags) {
    KeyValueConfig cfg = resolve_config(flags, "aggregate");
    if (!flags.input) throw ConfigError("aggregate: --input is required");
    cfg.set("input", flags.input->string());
    const std::string what = flags.kind.value_or("probs");
    if (what != "probs" && what != "predictions") throw ConfigError("aggregate: --kind must be probs or predictions");
    cfg.set("kind", what);
    RunManifest manifest = start_manifest("aggregate", cfg);
    manifest.input_digests[flags.input->string()] = file_digest(*flags.input);

    const Eigen::MatrixXd rows = read_matrix(*flags.input);
    const Eigen::VectorXd agg = what == "probs" ? aggregate_model_probs(rows) : aggregate_predictions(rows);
    const fs::path dir = out_dir_of(cfg);
    TableWriter t({"index", "value"});
    for (Eigen::Index k = 0; k < agg.size(); ++k) t.add_row({std::to_string(k), format_double(agg(k))});
    t.write(dir / "aggregate.csv", manifest.config_hash);
    manifest.outputs = {"aggregate.csv", "aggregate.jsonl"};
    finish_manifest(dir, manifest);
}

void cmd_gen_data(const CommandFlags& flags) {
    const KeyValueConfig cfg = resolve_config(flags, "gen-data");
    cfg.require_known(gendata_config_keys());
    SyntheticSpec spec;
    spec.n = cfg.get_int("n", spec.n);
    spec.d = cfg.get_int("d", spec.d);
    spec.n_true = cfg.get_int("n_true", spec.n_true);
    spec.noise_sd = cfg.get_double("noise_sd", spec.noise_sd);
    const auto master = cfg.get_uint("seed", 0);
    spec.seed = derive_seed(master, 0, 0, SeedPurpose::synthetic);
    if (cfg.has("beta")) {
        const auto b = cfg.get_doubles("beta", {});
        spec.beta_true = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    }
    if (spec.n < 1 || spec.d < 1) throw ConfigError("gen-data: n and d must be positive");
    RunManifest manifest = start_manifest("gen-data", cfg);
    SyntheticData data = generate_synthetic(spec);

    OutlierPlan plan;
    plan.count = static_cast<std::size_t>(cfg.get_uint("outliers", 0));
    plan.magnitude = cfg.get_double("magnitude", plan.magnitude);
    std::vector<std::size_t> targets;
    if (plan.count > 0) {
        const auto seed = derive_seed(master, 0, 0, SeedPurpose::outliers);
        targets = Rng(seed).sample_without_replacement(static_cast<std::size_t>(spec.n), plan.count);
        plan.target_indices = targets;
        data.data = inject_outliers(data.data, plan, seed);
    }

    const fs::path dir = out_dir_of(cfg);
    const fs::path out = cfg.get("out", (dir / "data.csv").string());
    write_csv(out, data.data, "y");
    nlohmann::json truth;
    truth["manifest_hash"] = manifest.config_hash;
    truth["beta_true"] = std::vector<double>(data.beta_true.data(), data.beta_true.data() + data.beta_true.size());
    truth["outlier_rows"] = targets;
    std::ofstream(dir / "truth.json") << truth.dump(2) << "\n";
    manifest.outputs = {out.string(), "truth.json"};
    finish_manifest(dir, manifest);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Robust distributed Bayesian model selection"};
    app.require_subcommand(1);
    CommandFlags flags;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "key = value configuration file");
        sub->add_option("--seed", flags.seed, "master seed");
        sub->add_option("--out-dir", flags.out_dir, "output directory");
        sub->add_option("--parallelism", flags.parallelism, "worker threads")->check(CLI::PositiveNumber);
    };
    auto* fit = app.add_subcommand("fit", "partition, fit every subset, aggregate");
    add_common(fit);
    fit->add_option("--data", flags.data, "CSV with a header row");
    fit->add_option("--subsets", flags.subsets, "number of subsets R")->check(CLI::PositiveNumber);
    fit->add_option("--method", flags.method, "bma | aic | bic | median_prob | spike_slab");
    fit->add_option("--strategy", flags.strategy, "model_combination | estimate_combination");

    auto* exp = app.add_subcommand("experiment", "run a simulation or real-data study");
    add_common(exp);
    exp->add_option("--kind", flags.kind,
                    "contamination | magnitude | coverage | coef_coverage | bigdata | realdata | concentration");
    exp->add_option("--trials", flags.trials, "trials per grid point")->check(CLI::PositiveNumber);
    exp->add_option("--subsets", flags.subsets, "single R value")->check(CLI::PositiveNumber);
    exp->add_option("--method", flags.method, "comma-separated methods");
    exp->add_option("--strategy", flags.strategy, "comma-separated strategies");
    exp->add_option("--data", flags.data, "CSV for realdata");

    auto* agg = app.add_subcommand("aggregate", "geometric median of probability or prediction vectors");
    add_common(agg);
    agg->add_option("--input", flags.input, "CSV, one vector per row")->required();
    agg->add_option("--kind", flags.kind, "probs | predictions");

    auto* gen = app.add_subcommand("gen-data", "write a synthetic regression dataset");
    add_common(gen);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "error kind=config message=" << msg << "\n";
        return 2;
    }

    try {
        if (fit->parsed())
            cmd_fit(flags);
        else if (exp->parsed())
            cmd_experiment(flags);
        else if (agg->parsed())
            cmd_aggregate(flags);
        else
            cmd_gen_data(flags);
    } catch (const std::exception& e) {
        std::cerr << error_line(e) << "\n";
        return exit_code_for(e);
    }
    return 0;
}

}  // namespace medpost
