// harness.hpp: scenario runner behind the tdas-dicke command line.
//
// Every run writes into the output directory:
//   <label>.manifest.ini   resolved config, valid input for another run
//   <label>.summary.json   headline numbers, or the error that stopped the run
//   <label>_*.csv / .json  data files
// Outputs depend only on the config, never on thread count or wall clock.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tdas/config.hpp"

namespace tdas {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

struct RunOutcome {
    int exit_code{kExitOk};
    std::vector<std::filesystem::path> files;
    std::string summary_json;
};

// Numerical failures are caught, embedded in the summary and reported as
// kExitNumerical. Only I/O problems escape as exceptions.
[[nodiscard]] RunOutcome run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

[[nodiscard]] const std::vector<std::string_view>& figure_ids();

// Config texts of a figure preset. Throws ConfigError for unknown ids.
[[nodiscard]] std::vector<std::string> figure_preset(std::string_view id);

// Runs every config of the preset; the exit code is the worst one.
[[nodiscard]] RunOutcome run_figure(std::string_view id, const std::filesystem::path& out_dir);

} // namespace tdas
