// tdas-dicke: run a scenario config or regenerate a figure's data.
//
//   tdas-dicke <scenario> --config <path> [--out <dir>]
//   tdas-dicke figure <id> --out <dir>

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tdas/config.hpp"
#include "tdas/errors.hpp"
#include "tdas/harness.hpp"

namespace {

int report(const tdas::RunOutcome& out) {
    for (const auto& f : out.files) std::cout << f.string() << "\n";
    if (out.exit_code != tdas::kExitOk) {
        std::cerr << "tdas-dicke: run failed (exit " << out.exit_code << "), see summary JSON\n";
    }
    return out.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delayed-feedback open Dicke model simulator", "tdas-dicke"};
    app.set_version_flag("--version", std::string(tdas::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    for (auto name : tdas::scenario_names()) {
        auto* sub = app.add_subcommand(std::string(name), "run the " + std::string(name) + " scenario");
        sub->add_option("--config", config_path, "scenario config (INI)")->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    }
    std::string figure_id;
    auto* fig = app.add_subcommand("figure", "regenerate the data behind a figure");
    fig->add_option("id", figure_id, "figure id (fig3 ... fig9)")->required();
    fig->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tdas::kExitConfig;
    }

    try {
        if (fig->parsed()) return report(tdas::run_figure(figure_id, out_dir));
        const std::string scenario = app.get_subcommands().front()->get_name();
        tdas::ScenarioConfig cfg = tdas::load_config(config_path);
        if (tdas::to_string(cfg.scenario) != scenario) {
            throw tdas::ConfigError("config declares scenario '" + std::string(tdas::to_string(cfg.scenario)) +
                                    "' but '" + scenario + "' was requested");
        }
        return report(tdas::run_scenario(cfg, out_dir));
    } catch (const tdas::ConfigError& e) {
        std::cerr << "tdas-dicke: config error: " << e.what() << "\n";
        return tdas::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "tdas-dicke: " << e.what() << "\n";
        return tdas::kExitNumerical;
    }
}
