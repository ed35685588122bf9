#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medpost/engine.hpp"
#include "medpost/experiments.hpp"

namespace medpost {

/// Flat key = value configuration. '#' starts a comment; blank lines are
/// ignored; keys are case-sensitive; later assignments override earlier ones.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
    std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const;

    /// Throws ConfigError naming the first key not in `known`.
    void require_known(const std::vector<std::string>& known) const;

    /// Sorted "key=value" lines, skipping keys in `exclude`.
    std::string canonical(const std::vector<std::string>& exclude = {}) const;
    /// FNV-1a of canonical(exclude); independent of the order keys were written in.
    std::uint64_t hash(const std::vector<std::string>& exclude = {}) const;

private:
    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
/// FNV-1a digest of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

/// Keys accepted by `fit`, `experiment` and `gen-data` configs.
const std::vector<std::string>& fit_config_keys();
const std::vector<std::string>& experiment_config_keys();
const std::vector<std::string>& gendata_config_keys();

PipelineConfig pipeline_from_config(const KeyValueConfig& cfg);
ExperimentSpec experiment_from_config(ExperimentKind kind, const KeyValueConfig& cfg);
UniverseSpec universe_from_config(const KeyValueConfig& cfg, UniverseSpec fallback);

}  // namespace medpost
