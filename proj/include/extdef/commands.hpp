#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace extdef {

struct GlobalOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;  // overrides the config seed
    int workers = 1;
};

/// Subcommand entry points; configs are the parsed --config JSON. All
/// throw config_error / numeric_error, mapped to exit codes by the CLI.
void cmd_simulate(const nlohmann::json& cfg, const GlobalOptions& opts);
void cmd_deform(const nlohmann::json& cfg, const GlobalOptions& opts);
void cmd_fit(const nlohmann::json& cfg, const GlobalOptions& opts);
void cmd_diagnose(const nlohmann::json& cfg, const GlobalOptions& opts);
void cmd_study(const nlohmann::json& cfg, const GlobalOptions& opts);

}  // namespace extdef
