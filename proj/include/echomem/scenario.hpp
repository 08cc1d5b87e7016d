// Declarative scenario runner. Scenario files are JSON; frequencies are
// given in MHz, times in microseconds, pulse areas in units of pi, phases
// in radians. Unknown keys are rejected with their full path.

#pragma once

#include "echomem/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace echomem {

struct RunOptions {
    std::filesystem::path scenario_path;
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    double grid_scale = 1.0;
    bool quiet = false;
};

// Executes the scenario and writes its artifacts plus a run manifest.
// Returns the list of files written (relative to out_dir).
std::vector<std::string> run_scenario_file(const RunOptions& options);

// Parsed-object entry point (used by sweeps and tests).
std::vector<std::string> run_scenario_json(const Json& scenario, const RunOptions& options,
                                           const std::string& source_hash);

// Exit codes shared by the CLI: 0 ok, 2 validation, 3 numerical, 4 acceptance.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitAcceptance = 4;

} // namespace echomem
