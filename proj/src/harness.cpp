#include "tdas/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "tdas/errors.hpp"
#include "tdas/io.hpp"
#include "tdas/units.hpp"

namespace tdas {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::array<FixedPointKind, 4> kAllKinds = {
    FixedPointKind::Normal, FixedPointKind::Inverted, FixedPointKind::SuperRadiantPlus,
    FixedPointKind::SuperRadiantMinus};

json state_json(const MeanFieldState& x) { return json::array({x.x1, x.x2, x.jx, x.jy, x.jz}); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<MeanFieldState> try_fixed_point(FixedPointKind kind, const ModelParams& p) {
    try {
        return fixed_point(kind, p);
    } catch (const NotAFixedPoint&) {
        return std::nullopt;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

// Fixed point closest to x among those that exist at p.
std::pair<FixedPointKind, MeanFieldState> nearest_fixed_point(const ModelParams& p,
                                                              const MeanFieldState& x) {
    std::optional<std::pair<FixedPointKind, MeanFieldState>> best;
    for (auto kind : kAllKinds) {
        const auto fp = try_fixed_point(kind, p);
        if (fp && (!best || distance(*fp, x) < distance(best->second, x))) best.emplace(kind, *fp);
    }
    return *best; // normal and inverted always exist
}

json feedback_json(const FeedbackParams& f) {
    return {{"k_radus", f.gain()}, {"tau_us", f.tau}, {"r", f.r}, {"s", f.s}, {"phi_rad", f.phi}};
}

// Mean of the last `fraction` of a series.
double tail_mean(std::span<const double> v, double fraction) {
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * v.size()));
    return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(n), v.end(), 0.0) /
           static_cast<double>(n);
}

struct Context {
    const ScenarioConfig& cfg;
    fs::path out_dir;
    RunOutcome outcome;
    json results = json::object();

    void emit(const std::string& suffix, const std::string& text) {
        const fs::path path = out_dir / (cfg.label + suffix);
        write_file(path, text);
        outcome.files.push_back(path);
    }
};

void run_fixed_points(Context& ctx) {
    const ModelParams& base = ctx.cfg.model;
    const double gc = critical_coupling(base);
    ctx.results["g_c_radus"] = gc;
    ctx.results["g_c_2pi_mhz"] = units::to_2pi_mhz(gc);
    ctx.results["threshold_2pi_mhz"] = units::to_2pi_mhz(threshold_coupling(base));
    std::string csv = "g_over_gc,kind,x1,x2,jx,jy,jz,re_lambda1_radus\n";
    json points = json::array();
    for (double r : ctx.cfg.fixed_points.g_over_gc) {
        const ModelParams p = base.with_coupling(r * gc);
        json entry = {{"g_over_gc", r}, {"g_2pi_mhz", units::to_2pi_mhz(p.g)}};
        json fps = json::array();
        for (auto kind : kAllKinds) {
            const auto fp = try_fixed_point(kind, p);
            if (!fp) continue;
            std::optional<double> re;
            try {
                re = rightmost_root(linearize(p, *fp)).lambda.real();
            } catch (const Error&) {
            }
            fps.push_back({{"kind", to_string(kind)}, {"state", state_json(*fp)},
                           {"re_lambda1_radus", optional_json(re)}});
            csv += format_double(r) + ',' + std::string(to_string(kind));
            for (double v : fp->to_array()) csv += ',' + format_double(v);
            csv += ',' + (re ? format_double(*re) : std::string("nan")) + '\n';
        }
        entry["fixed_points"] = std::move(fps);
        points.push_back(std::move(entry));
    }
    ctx.results["points"] = std::move(points);
    ctx.emit("_fixed_points.csv", csv);
}

void run_simulate(Context& ctx) {
    const auto& s = ctx.cfg.simulate;
    const ModelParams& p = ctx.cfg.model;
    json cases = json::array();
    for (std::size_t i = 0; i < ctx.cfg.feedback.size(); ++i) {
        const FeedbackParams& f = ctx.cfg.feedback[i];
        const double h = s.step.value_or(default_step(p, f.tau));
        const Trajectory traj = integrate(p, f, s.initial, s.t_end, h, {s.stride});
        const std::string tag = "_case" + std::to_string(i);
        ctx.emit(tag + ".csv", trajectory_csv(traj));
        ctx.emit(tag + "_filtered.csv", filtered_csv(traj, s.lowpass_cutoff));

        json c = {{"feedback", feedback_json(f)}, {"step_us", h}, {"samples", traj.size()},
                  {"final_state", state_json(traj.final_state())},
                  {"max_spin_norm_defect", max_spin_norm_defect(traj)}};
        if (s.target.mode != TargetSpec::Mode::None) {
            std::optional<std::pair<FixedPointKind, MeanFieldState>> target;
            if (s.target.mode == TargetSpec::Mode::Auto) {
                target = nearest_fixed_point(p, traj.final_state());
            } else if (const auto fp = try_fixed_point(s.target.kind, p)) {
                target.emplace(s.target.kind, *fp);
            }
            if (target) {
                c["target"] = {{"kind", to_string(target->first)}, {"state", state_json(target->second)}};
                c["final_distance"] = distance(traj.final_state(), target->second);
                c["relaxation_time_us"] = optional_json(relaxation_time(traj, target->second, s.relax_eps));
            } else {
                c["target"] = nullptr;
            }
        }
        cases.push_back(std::move(c));
    }
    ctx.results["relax_eps"] = s.relax_eps;
    ctx.results["cases"] = std::move(cases);
}

void run_ramp(Context& ctx) {
    const auto& s = ctx.cfg.ramp;
    const ModelParams& p = ctx.cfg.model;
    const double gth = threshold_coupling(p);
    const double g_final = s.g_final_ratio * gth;
    const ModelParams at_final = p.with_coupling(g_final);
    ctx.results["threshold_2pi_mhz"] = units::to_2pi_mhz(gth);
    ctx.results["g_final_2pi_mhz"] = units::to_2pi_mhz(g_final);
    const auto sr = try_fixed_point(FixedPointKind::SuperRadiantPlus, at_final);
    json runs = json::array();
    for (std::size_t it = 0; it < s.t0.size(); ++it) {
        for (std::size_t i = 0; i < ctx.cfg.feedback.size(); ++i) {
            const FeedbackParams& f = ctx.cfg.feedback[i];
            const double t0 = s.t0[it];
            const double t_end = s.t_end.value_or(t0);
            const double h = s.step.value_or(default_step(p, f.tau));
            const Trajectory traj =
                integrate_ramp(p, f, RampSchedule{t0, g_final}, s.initial, t_end, h, {s.stride});
            ctx.emit("_t0_" + std::to_string(it) + "_case" + std::to_string(i) + ".csv",
                     trajectory_csv(traj));

            const MeanFieldState& x = traj.final_state();
            const auto n = photon_number_series(traj);
            const auto jz = jz_series(traj);
            json r = {{"t0_us", t0}, {"t_end_us", t_end}, {"feedback", feedback_json(f)},
                      {"step_us", h}, {"final_state", state_json(x)},
                      {"tail_mean_photon_number", tail_mean(n, 0.05)},
                      {"tail_mean_jz", tail_mean(jz, 0.05)}};
            if (sr) {
                // Compare against the super-radiant state on the same side as x.
                const MeanFieldState target = x.jx >= 0.0 ? *sr : parity(*sr);
                r["target_state"] = state_json(target);
                r["relative_distance"] = distance(x, target) / norm(target);
                r["photon_ratio"] = x.photon_number() / target.photon_number();
                r["tail_photon_ratio"] = tail_mean(n, 0.05) / target.photon_number();
            }
            runs.push_back(std::move(r));
        }
    }
    ctx.results["runs"] = std::move(runs);
}

void run_stability_scan(Context& ctx) {
    const auto& s = ctx.cfg.scan;
    const ModelParams& p = ctx.cfg.model;
    RootSearchOptions opts;
    opts.collocation_degree = s.collocation_degree;
    const LinearizedSystem base = linearize(p, fixed_point(s.phase, p));
    const StabilitySurface surface = scan_k_tau(p, s.phase, s.k, s.tau, opts);
    ctx.emit("_scan.csv", scan_csv(surface));
    if (s.approx) {
        try {
            ctx.emit("_approx.csv", approx_csv(base, s.k, s.tau));
        } catch (const DomainError& e) {
            ctx.results["approx_skipped"] = e.what();
        }
    }

    ctx.results["phase"] = to_string(s.phase);
    ctx.results["fixed_point"] = state_json(base.fixed_point);
    json rows = json::array();
    std::size_t failures = 0;
    std::string first_error;
    for (std::size_t ik = 0; ik < surface.rows.size(); ++ik) {
        const TauScan& scan = surface.rows[ik];
        json row = {{"k_radus", surface.k_grid[ik]}};
        if (scan.argmin) {
            const ScanPoint& m = scan.minimum();
            row["min_re_lambda1_radus"] = m.root.lambda.real();
            row["min_re_lambda1_2pi_hz"] = units::to_2pi_hz(m.root.lambda.real());
            row["argmin_tau_us"] = m.tau;
        }
        if (scan.first_local_min) row["first_local_min_tau_us"] = scan.points[*scan.first_local_min].tau;
        std::size_t jumps = 0;
        for (const auto& pt : scan.points) {
            jumps += pt.branch_jump ? 1 : 0;
            if (!pt.converged) {
                if (failures++ == 0) first_error = pt.error;
            }
        }
        row["branch_jumps"] = jumps;
        rows.push_back(std::move(row));
    }
    ctx.results["rows"] = std::move(rows);
    if (const auto am = surface.argmin()) {
        const ScanPoint& m = surface.at(am->first, am->second);
        ctx.results["global_min"] = {{"k_radus", m.k}, {"tau_us", m.tau},
                                     {"re_lambda1_radus", m.root.lambda.real()},
                                     {"re_lambda1_2pi_hz", units::to_2pi_hz(m.root.lambda.real())}};
    }
    ctx.results["failed_points"] = failures;
    if (failures) throw SearchFailed(std::to_string(failures) + " scan points failed; first: " + first_error);
}

std::vector<SweepPoint> sweep_any_side(const ModelParams& p, const SweepSettings& s, double k,
                                       double tau) {
    if (s.side) return sweep_fluctuations(p, *s.side, k, tau, s.g_over_gc);
    std::vector<double> below, above;
    for (double r : s.g_over_gc) (r < 1.0 ? below : above).push_back(r);
    auto lo = sweep_fluctuations(p, CriticalSide::Below, k, tau, below);
    auto hi = sweep_fluctuations(p, CriticalSide::Above, k, tau, above);
    std::vector<SweepPoint> out;
    std::size_t a = 0, b = 0;
    for (double r : s.g_over_gc) out.push_back(r < 1.0 ? lo[a++] : hi[b++]);
    return out;
}

void run_fluctuations(Context& ctx) {
    const ModelParams& p = ctx.cfg.model;
    ctx.results["g_c_2pi_mhz"] = units::to_2pi_mhz(critical_coupling(p));
    json cases = json::array();
    for (std::size_t i = 0; i < ctx.cfg.feedback.size(); ++i) {
        const FeedbackParams& f = ctx.cfg.feedback[i];
        const auto points = sweep_any_side(p, ctx.cfg.sweep, f.gain(), f.tau);
        ctx.emit("_case" + std::to_string(i) + ".csv", sweep_csv(points));
        std::size_t diverged = 0;
        json divergent = json::array();
        for (const auto& pt : points) {
            if (!pt.converged) {
                ++diverged;
                divergent.push_back(pt.g_over_gc);
            }
        }
        cases.push_back({{"feedback", feedback_json(f)}, {"points", points.size()},
                         {"divergent_points", diverged}, {"divergent_g_over_gc", divergent}});
    }
    ctx.results["cases"] = std::move(cases);
}

void run_exponent(Context& ctx) {
    const auto& s = ctx.cfg.exponent;
    const ModelParams& p = ctx.cfg.model;
    const auto grid = exponent_grid(s.side, s.window_lo, s.window_hi, s.points);
    json cases = json::array();
    for (std::size_t i = 0; i < ctx.cfg.feedback.size(); ++i) {
        const FeedbackParams& f = ctx.cfg.feedback[i];
        const std::string tag = "_case" + std::to_string(i);
        const auto points = sweep_fluctuations(p, s.side, f.gain(), f.tau, grid);
        ctx.emit(tag + "_sweep.csv", sweep_csv(points));
        std::vector<double> ratios, fluct;
        for (const auto& pt : points) {
            if (!pt.converged) {
                throw DivergentFluctuations("exponent sweep point g/g_c = " +
                                                format_double(pt.g_over_gc) + ": " + pt.error,
                                            std::nan(""));
            }
            ratios.push_back(pt.g_over_gc);
            fluct.push_back(pt.fluct);
        }
        const ExponentFit fit = fit_flux_exponent(ratios, fluct);
        const json report = {{"side", to_string(s.side)}, {"exponent", fit.exponent},
                             {"stderr", fit.standard_error},
                             {"window", json::array({s.window_lo, s.window_hi})}};
        ctx.emit(tag + "_exponent.json", report.dump(2) + "\n");
        json c = report;
        c["feedback"] = feedback_json(f);
        c["points"] = fit.points;
        cases.push_back(std::move(c));
    }
    ctx.results["cases"] = std::move(cases);
}

} // namespace

RunOutcome run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
    Context ctx{cfg, out_dir, {}, json::object()};
    ctx.emit(".manifest.ini", render_manifest(cfg));

    json summary = {{"tool", "tdas-dicke"}, {"version", kVersion}, {"scenario", to_string(cfg.scenario)},
                    {"label", cfg.label}};
    try {
        switch (cfg.scenario) {
        case Scenario::FixedPoints: run_fixed_points(ctx); break;
        case Scenario::Simulate: run_simulate(ctx); break;
        case Scenario::Ramp: run_ramp(ctx); break;
        case Scenario::StabilityScan: run_stability_scan(ctx); break;
        case Scenario::Fluctuations: run_fluctuations(ctx); break;
        case Scenario::Exponent: run_exponent(ctx); break;
        }
        summary["status"] = "ok";
    } catch (const ConfigError& e) {
        summary["status"] = "error";
        summary["error"] = {{"kind", e.kind()}, {"message", e.what()}};
        ctx.outcome.exit_code = kExitConfig;
    } catch (const Error& e) {
        summary["status"] = "error";
        summary["error"] = {{"kind", e.kind()}, {"message", e.what()}};
        ctx.outcome.exit_code = kExitNumerical;
    }
    summary["results"] = std::move(ctx.results);
    ctx.outcome.summary_json = summary.dump(2) + "\n";
    ctx.emit(".summary.json", ctx.outcome.summary_json);
    return std::move(ctx.outcome);
}

const std::vector<std::string_view>& figure_ids() {
    static const std::vector<std::string_view> ids = {"fig3", "fig4", "fig5", "fig6",
                                                      "fig7", "fig8", "fig9"};
    return ids;
}

namespace {

// Time evolution from the Bloch-diagonal state below and above g_c.
std::vector<std::string> time_evolution(const std::string& fig) {
    const std::string common =
        "[simulate]\nt_end_ms = 100\nstep_us = 0.005\nstride = 1000\n"
        "initial = bloch_diagonal\nlowpass_cutoff_2pi_mhz = 0.001\n";
    return {
        "scenario = simulate\nlabel = " + fig + "_normal\n[model]\ng_over_gc = 0.74\n"
        "[feedback]\ngain_fraction = 0, 1, 1\ntau_us = 0, 50, 100\n" + common,
        "scenario = simulate\nlabel = " + fig + "_superradiant\n[model]\ng_over_gc = 1.1\n"
        "[feedback]\ngain_fraction = 0, 1\ntau_us = 0, 50\n" + common,
    };
}

std::string stability_curve(const std::string& label, double ratio, std::string_view phase,
                            const std::string& k_grid, const std::string& tau_grid, bool approx) {
    std::ostringstream os;
    os << "scenario = stability-scan\nlabel = " << label << "\n[model]\ng_over_gc = "
       << format_double(ratio) << "\n[stability-scan]\nphase = " << phase
       << "\nk_over_half_kappa = " << k_grid << "\ntau_us = " << tau_grid
       << "\napprox = " << (approx ? "true" : "false") << "\n";
    return os.str();
}

std::vector<std::string> ramp(const std::string& fig, const std::string& model_extra) {
    return {"scenario = ramp\nlabel = " + fig + "\n[model]\n" + model_extra +
            "[feedback]\ngain_fraction = 0, 1\ntau_us = 0, 16\n"
            "[ramp]\nt0_ms = 20, 200\ng_final_ratio = 1.5\nstep_us = 0.005\nstride = 2000\n"
            "initial = near_normal\n"};
}

std::string join_grid(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : ", ") + format_double(x);
    return out;
}

} // namespace

std::vector<std::string> figure_preset(std::string_view id) {
    if (id == "fig3" || id == "fig4") return time_evolution(std::string(id));
    if (id == "fig5") {
        return {stability_curve("fig5_normal", 0.74, "normal", "1", "0:150:151", true),
                stability_curve("fig5_inverted_below", 0.74, "inverted", "1", "0:150:151", true),
                stability_curve("fig5_superradiant", 1.1, "sr_plus", "1", "0:150:151", true),
                stability_curve("fig5_inverted_above", 1.1, "inverted", "1", "0:150:151", true)};
    }
    if (id == "fig6") return ramp("fig6", "");
    if (id == "fig7") return ramp("fig7", "omega_2pi_mhz = -10\n");
    if (id == "fig8") {
        return {stability_curve("fig8_normal", 0.74, "normal", "0.05:1:20", "0:150:76", false),
                stability_curve("fig8_superradiant", 1.1, "sr_plus", "0.05:1:20", "0:150:76", false)};
    }
    if (id == "fig9") {
        std::vector<double> grid;
        for (double r : parse_grid("log:0.5:0.001:60")) grid.push_back(1.0 - r);
        std::reverse(grid.begin(), grid.end());
        for (double r : parse_grid("log:0.001:0.5:60")) grid.push_back(1.0 + r);
        return {"scenario = fluctuations\nlabel = fig9\n[feedback]\ngain_fraction = 0, 1\n"
                "tau_us = 0, 50\n[fluctuations]\nside = auto\ng_over_gc = " +
                join_grid(grid) + "\n"};
    }
    std::string list;
    for (auto f : figure_ids()) list += (list.empty() ? "" : ", ") + std::string(f);
    throw ConfigError("unknown figure '" + std::string(id) + "' (valid: " + list + ")");
}

RunOutcome run_figure(std::string_view id, const fs::path& out_dir) {
    RunOutcome total;
    for (const auto& text : figure_preset(id)) {
        RunOutcome one = run_scenario(parse_config(text), out_dir);
        total.exit_code = std::max(total.exit_code, one.exit_code);
        total.files.insert(total.files.end(), one.files.begin(), one.files.end());
        total.summary_json += one.summary_json;
    }
    return total;
}

} // namespace tdas
