// config.hpp: scenario configuration files.
//
// Configs are INI text. Top-level keys `scenario` and `label`, then sections
// [model], [feedback] and one section named after the scenario. Rates carry a
// `_2pi_mhz` suffix, times `_us` or `_ms`. Unknown keys are rejected.
//
//   scenario = stability-scan
//   [model]
//   g_over_gc = 0.74
//   [stability-scan]
//   phase = normal
//   tau_us = 0:150:151
//
// Grids accept a comma list, `lo:hi:n` (linear) or `log:lo:hi:n`.
// Feedback keys accept comma lists; each index is one feedback case and
// single values are broadcast.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdas/dde.hpp"
#include "tdas/fluctuations.hpp"
#include "tdas/model.hpp"

namespace tdas {

enum class Scenario { FixedPoints, Simulate, Ramp, StabilityScan, Fluctuations, Exponent };

[[nodiscard]] std::string_view to_string(Scenario s);
// Throws ConfigError for unknown names.
[[nodiscard]] Scenario scenario_from_string(std::string_view name);
[[nodiscard]] const std::vector<std::string_view>& scenario_names();

// Target used for relaxation times and ramp end states.
struct TargetSpec {
    enum class Mode { Auto, None, Kind } mode{Mode::Auto};
    FixedPointKind kind{FixedPointKind::Normal};
};

struct SimulateSettings {
    double t_end{0.0};                 // [us]
    std::optional<double> step;        // [us], default_step() when empty
    std::size_t stride{1};
    InitialCondition initial{InitialCondition::bloch_diagonal()};
    double lowpass_cutoff{0.0};        // [rad/us]
    double relax_eps{kDefaultRelaxationEps};
    TargetSpec target{};
};

struct RampSettings {
    std::vector<double> t0;            // [us], one run per entry and feedback case
    double g_final_ratio{1.5};         // relative to threshold_coupling
    std::optional<double> t_end;       // [us], defaults to each t0
    std::optional<double> step;
    std::size_t stride{1};
    InitialCondition initial{InitialCondition::near_normal(1e5)};
};

struct ScanSettings {
    FixedPointKind phase{FixedPointKind::Normal};
    std::vector<double> k;             // [rad/us]
    std::vector<double> tau;           // [us]
    int collocation_degree{40};
    bool approx{true};
};

struct SweepSettings {
    std::optional<CriticalSide> side;  // empty: chosen per ratio, g < g_c is below
    std::vector<double> g_over_gc;
};

struct ExponentSettings {
    CriticalSide side{CriticalSide::Below};
    double window_lo{kExponentWindowLo};
    double window_hi{kExponentWindowHi};
    std::size_t points{kExponentPoints};
};

struct FixedPointSettings {
    std::vector<double> g_over_gc;
};

struct ScenarioConfig {
    Scenario scenario{Scenario::FixedPoints};
    std::string label{"run"};
    ModelParams model{};               // g resolved when the config sets one
    std::vector<FeedbackParams> feedback;

    FixedPointSettings fixed_points;
    SimulateSettings simulate;
    RampSettings ramp;
    ScanSettings scan;
    SweepSettings sweep;
    ExponentSettings exponent;

    // Normalized key/value text per section with every default filled in.
    // Rendering it back through parse_config reproduces this config.
    std::map<std::string, std::map<std::string, std::string>> resolved;
};

// Throws ConfigError on syntax errors, unknown keys or invalid values.
[[nodiscard]] ScenarioConfig parse_config(std::string_view text);
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path);

// INI text of the fully resolved config, headed by a version comment.
[[nodiscard]] std::string render_manifest(const ScenarioConfig& cfg);

// Grid syntax described above. Throws ConfigError.
[[nodiscard]] std::vector<double> parse_grid(std::string_view text);

inline constexpr std::string_view kVersion = "1.0.0";

} // namespace tdas
