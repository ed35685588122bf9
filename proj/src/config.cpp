#include "medpost/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "medpost/errors.hpp"

namespace medpost {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config " + origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config " + origin + ":" + std::to_string(line_no) + ": empty key");
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(key, it->second);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::int64_t out = 0;
    const auto& v = it->second;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::uint64_t out = 0;
    const auto& v = it->second;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("config: key '" + key + "' expects a nonnegative integer, got '" + v + "'");
    return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, std::vector<double> fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const auto& item : split(it->second, ',')) out.push_back(to_double(key, item));
    return out;
}

std::vector<std::string> KeyValueConfig::get_strings(const std::string& key, std::vector<std::string> fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : split(it->second, ',');
}

void KeyValueConfig::require_known(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : values_)
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("config: unknown key '" + k + "'");
}

std::string KeyValueConfig::canonical(const std::vector<std::string>& exclude) const {
    std::string out;
    for (const auto& [k, v] : values_) {
        if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) continue;
        out += k + "=" + v + "\n";
    }
    return out;
}

std::uint64_t KeyValueConfig::hash(const std::vector<std::string>& exclude) const { return fnv1a(canonical(exclude)); }

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return hex64(fnv1a(buf.str()));
}

namespace {

const std::vector<std::string> kCommonKeys = {
    "seed", "parallelism", "iterations", "burn_in", "thin", "prior_a", "prior_b", "prior_scale", "universe",
    "model_size", "models", "intercept", "nu0", "ss_a", "ss_b", "a_tau", "b_tau", "ss_basis", "weiszfeld_tol",
    "weiszfeld_max_iters", "out_dir", "data", "response"};

std::vector<std::string> with_common(std::vector<std::string> extra) {
    extra.insert(extra.end(), kCommonKeys.begin(), kCommonKeys.end());
    return extra;
}

}  // namespace

const std::vector<std::string>& fit_config_keys() {
    static const auto keys = with_common({"method", "strategy", "r", "r_power", "test_data", "n_test", "quantiles",
                                          "coef_quantiles", "standardize", "trace"});
    return keys;
}

const std::vector<std::string>& experiment_config_keys() {
    static const auto keys = with_common({"kind", "trials", "methods", "strategies", "r_values", "grid", "n", "d",
                                          "n_true", "noise_sd", "magnitude", "outliers", "pin_outliers", "n_test"});
    return keys;
}

const std::vector<std::string>& gendata_config_keys() {
    static const std::vector<std::string> keys = {"n", "d", "n_true", "noise_sd", "seed", "outliers", "magnitude",
                                                  "out", "out_dir", "beta"};
    return keys;
}

UniverseSpec universe_from_config(const KeyValueConfig& cfg, UniverseSpec fallback) {
    if (!cfg.has("universe")) return fallback;
    UniverseSpec u;
    const std::string mode = cfg.get("universe", "");
    if (mode == "all_subsets") {
        u.kind = UniverseKind::all_subsets;
    } else if (mode == "fixed_size") {
        u.kind = UniverseKind::fixed_size;
        const auto m = cfg.get_int("model_size", -1);
        if (m < 0) throw ConfigError("config: universe = fixed_size needs model_size");
        u.model_size = static_cast<std::size_t>(m);
    } else if (mode == "user_list") {
        u.kind = UniverseKind::user_list;
        for (const auto& bits : cfg.get_strings("models", {})) u.user_models.push_back(ModelSpec::parse(bits));
        if (u.user_models.empty()) throw ConfigError("config: universe = user_list needs models = 0101,...");
    } else {
        throw ConfigError("config: unknown universe '" + mode + "'");
    }
    return u;
}

namespace {

McmcConfig mcmc_from(const KeyValueConfig& cfg) {
    McmcConfig m;
    m.iterations = static_cast<int>(cfg.get_int("iterations", m.iterations));
    m.burn_in = static_cast<int>(cfg.get_int("burn_in", m.burn_in));
    m.thin = static_cast<int>(cfg.get_int("thin", m.thin));
    m.validate();
    return m;
}

std::size_t positive_size(const KeyValueConfig& cfg, const std::string& key, std::int64_t fallback) {
    const auto v = cfg.get_int(key, fallback);
    if (v < 1) throw ConfigError("config: " + key + " must be at least 1");
    return static_cast<std::size_t>(v);
}

}  // namespace

PipelineConfig pipeline_from_config(const KeyValueConfig& cfg) {
    PipelineConfig p;
    p.method = parse_method(cfg.get("method", "bma"));
    p.strategy = parse_strategy(cfg.get("strategy", "model_combination"));
    p.r = positive_size(cfg, "r", 1);
    if (cfg.has("r_power")) p.r_power = static_cast<int>(cfg.get_int("r_power", 1));
    p.mcmc = mcmc_from(cfg);
    p.prior_a = cfg.get_double("prior_a", p.prior_a);
    p.prior_b = cfg.get_double("prior_b", p.prior_b);
    p.prior_scale = cfg.get_double("prior_scale", p.prior_scale);
    p.ss_prior.nu0 = cfg.get_double("nu0", p.ss_prior.nu0);
    p.ss_prior.a = cfg.get_double("ss_a", p.ss_prior.a);
    p.ss_prior.b = cfg.get_double("ss_b", p.ss_prior.b);
    p.ss_prior.a_tau = cfg.get_double("a_tau", p.ss_prior.a_tau);
    p.ss_prior.b_tau = cfg.get_double("b_tau", p.ss_prior.b_tau);
    const std::string basis = cfg.get("ss_basis", "per_subset");
    if (basis == "per_subset")
        p.ss_basis = ScaleBasis::per_subset;
    else if (basis == "global")
        p.ss_basis = ScaleBasis::global;
    else
        throw ConfigError("config: ss_basis must be per_subset or global");
    p.universe = universe_from_config(cfg, p.universe);
    p.intercept = cfg.get_bool("intercept", false);
    p.master_seed = cfg.get_uint("seed", 0);
    p.parallelism = positive_size(cfg, "parallelism", 1);
    p.predictive_quantiles = cfg.get_bool("quantiles", true);
    p.coef_quantiles = cfg.get_bool("coef_quantiles", false);
    p.weiszfeld.tol = cfg.get_double("weiszfeld_tol", p.weiszfeld.tol);
    p.weiszfeld.max_iters = static_cast<int>(cfg.get_int("weiszfeld_max_iters", p.weiszfeld.max_iters));
    p.validate();
    return p;
}

ExperimentSpec experiment_from_config(ExperimentKind kind, const KeyValueConfig& cfg) {
    ExperimentSpec s = default_spec(kind);
    s.trials = static_cast<int>(cfg.get_int("trials", s.trials));
    if (cfg.has("methods")) {
        s.methods.clear();
        for (const auto& m : cfg.get_strings("methods", {})) s.methods.push_back(parse_method(m));
    }
    if (cfg.has("strategies")) {
        s.strategies.clear();
        for (const auto& m : cfg.get_strings("strategies", {})) s.strategies.push_back(parse_strategy(m));
    }
    if (cfg.has("r_values")) {
        s.r_values.clear();
        for (const double r : cfg.get_doubles("r_values", {})) {
            if (r < 1 || r != std::floor(r)) throw ConfigError("config: r_values must be positive integers");
            s.r_values.push_back(static_cast<std::size_t>(r));
        }
    }
    s.grid = cfg.get_doubles("grid", s.grid);
    s.n = cfg.get_int("n", s.n);
    s.d = cfg.get_int("d", s.d);
    s.n_true = cfg.get_int("n_true", s.n_true);
    s.noise_sd = cfg.get_double("noise_sd", s.noise_sd);
    s.magnitude = cfg.get_double("magnitude", s.magnitude);
    s.outliers = static_cast<std::size_t>(cfg.get_uint("outliers", s.outliers));
    s.pin_outliers = cfg.get_bool("pin_outliers", s.pin_outliers);
    s.n_test = static_cast<std::size_t>(cfg.get_uint("n_test", s.n_test));
    s.base_seed = cfg.get_uint("seed", s.base_seed);
    s.mcmc = mcmc_from(cfg);
    s.parallelism = static_cast<std::size_t>(cfg.get_uint("parallelism", s.parallelism));
    s.universe = universe_from_config(cfg, s.universe);
    s.prior_scale = cfg.get_double("prior_scale", s.prior_scale);
    s.intercept = cfg.get_bool("intercept", s.intercept);
    if (cfg.has("data")) s.data_path = cfg.get("data", "");
    s.response_column = cfg.get("response", s.response_column);
    if (kind != ExperimentKind::realdata) s.validate();
    return s;
}

}  // namespace medpost
