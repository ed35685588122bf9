#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "medpost/config.hpp"

namespace medpost {

/// Exit codes: 0 success, 1 unexpected failure, 2 configuration,
/// 3 data, 4 numerical.
int exit_code_for(const std::exception& e);
/// "error kind=<config|data|numeric|internal> message=<...>" on one line.
std::string error_line(const std::exception& e);

/// Command-line flags shared by the subcommands. Set flags override the
/// matching config keys.
struct CommandFlags {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> subsets;
    std::optional<std::string> method;
    std::optional<std::string> strategy;
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::size_t> parallelism;
    std::optional<int> trials;
    std::optional<std::string> kind;             // experiment kind
    std::optional<std::filesystem::path> input;  // aggregate input
    std::optional<std::filesystem::path> data;   // fit data override
};

/// Loads the config file (if any) and applies flag overrides.
KeyValueConfig resolve_config(const CommandFlags& flags, const std::string& command);

void cmd_fit(const CommandFlags& flags);
void cmd_experiment(const CommandFlags& flags);
void cmd_aggregate(const CommandFlags& flags);
void cmd_gen_data(const CommandFlags& flags);

/// Full CLI entry point; never throws.
int run_cli(int argc, char** argv);

}  // namespace medpost
