// Acceptance checks against the reference numbers. Prints one PASS/FAIL line
// per criterion and exits 0 once everything has been reported; --strict turns
// any FAIL into a nonzero exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "tdas/config.hpp"
#include "tdas/dde.hpp"
#include "tdas/errors.hpp"
#include "tdas/fluctuations.hpp"
#include "tdas/harness.hpp"
#include "tdas/stability.hpp"
#include "tdas/units.hpp"

using namespace tdas;
using nlohmann::json;

namespace {

struct Report {
    int failures{0};

    void line(int id, bool pass, const std::string& detail) {
        if (!pass) ++failures;
        std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within_rel(double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); }

ModelParams at_ratio(double r) {
    const ModelParams p = ModelParams::experiment();
    return p.with_coupling(r * critical_coupling(p));
}

FeedbackParams half_kappa(const ModelParams& p, double tau) {
    return FeedbackParams::with_gain(p.kappa, 0.5 * p.kappa, tau);
}

double re_hz(const CharRoot& r) { return units::to_2pi_hz(r.lambda.real()); }

std::vector<double> tau_grid(double hi, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = hi * i / (n - 1);
    return t;
}

// Fixed point nearest to x among the ones that exist at p.
std::pair<FixedPointKind, double> nearest_fixed_point(const ModelParams& p, const MeanFieldState& x) {
    std::pair<FixedPointKind, double> best{FixedPointKind::Normal, 1e300};
    for (auto kind : {FixedPointKind::Normal, FixedPointKind::Inverted, FixedPointKind::SuperRadiantPlus,
                      FixedPointKind::SuperRadiantMinus}) {
        try {
            const double d = distance(x, fixed_point(kind, p));
            if (d < best.second) best = {kind, d};
        } catch (const Error&) {
        }
    }
    return best;
}

// --------------------------------------------------------------------------

void criterion1(Report& rep) {
    const double gc = units::to_2pi_mhz(critical_coupling(ModelParams::experiment()));
    rep.line(1, within_rel(gc, 0.19, 0.01),
             fmt("g_c = %.6f 2pi MHz, reference 0.19 within 1%% (deviation %.2f%%)", gc, 100.0 * (gc / 0.19 - 1.0)));
}

void criterion2(Report& rep) {
    const ModelParams pn = at_ratio(0.74), ps = at_ratio(1.1);
    const double n0 = re_hz(rightmost_root(linearize(pn, fixed_point(FixedPointKind::Normal, pn))));
    const double s0 = re_hz(rightmost_root(linearize(ps, fixed_point(FixedPointKind::SuperRadiantPlus, ps))));
    const auto taus = tau_grid(150.0, 151);
    const TauScan sn = scan_tau(pn, FixedPointKind::Normal, 0.5 * pn.kappa, taus);
    const TauScan ss = scan_tau(ps, FixedPointKind::SuperRadiantPlus, 0.5 * ps.kappa, taus);
    const auto& mn = sn.points.at(sn.first_local_min.value_or(*sn.argmin));
    const auto& ms = ss.points.at(ss.first_local_min.value_or(*ss.argmin));
    const double vn = re_hz(mn.root), vs = re_hz(ms.root);
    const bool pass = within_rel(n0, -0.14, 0.15) && within_rel(s0, -0.35, 0.15) &&
                      within_rel(mn.tau, 52.0, 0.10) && within_rel(ms.tau, 50.0, 0.10) &&
                      within_rel(vn, -26.0, 0.10) && within_rel(vs, -58.0, 0.10);
    rep.line(2, pass,
             fmt("tau=0: normal %.4f (ref -0.14), SR %.4f (ref -0.35) 2pi Hz within 15%%; "
                 "first minima: normal %.4f 2pi Hz at tau=%g us (ref -26 at 52), SR %.4f at tau=%g (ref -58 at 50) "
                 "within 10%%",
                 n0, s0, vn, mn.tau, vs, ms.tau));
}

void criterion3(Report& rep) {
    const ModelParams pc = at_ratio(1.0);
    const double l1 = units::to_2pi_hz(approx_rightmost(linearize(pc, fixed_point(FixedPointKind::Normal, pc))).correction);
    double worst = 0.0;
    for (auto [r, kind] : {std::pair{0.74, FixedPointKind::Normal}, std::pair{1.1, FixedPointKind::SuperRadiantPlus}}) {
        const ModelParams p = at_ratio(r);
        const LinearizedSystem base = linearize(p, fixed_point(kind, p));
        for (double tau = 0.0; tau <= 5.0 + 1e-12; tau += 0.5) {
            const LinearizedSystem sys = base.with_feedback(0.5 * p.kappa, tau);
            const double exact = rightmost_root(sys).lambda.real();
            const double approx = approx_rightmost(sys).lambda().real();
            worst = std::max(worst, std::abs(approx - exact) / std::abs(exact));
        }
    }
    rep.line(3, within_rel(std::abs(l1), 0.3, 0.15) && worst < 0.05,
             fmt("lambda^(1) at g=g_c = %.4f 2pi Hz (ref magnitude 0.3 within 15%%); "
                 "worst relative deviation from the exact root for tau <= 5 us, k=kappa/2: %.3f%% (limit 5%%)",
                 l1, 100.0 * worst));
}

void criterion4(Report& rep) {
    const ModelParams p = at_ratio(1.1);
    const MeanFieldState sr = fixed_point(FixedPointKind::SuperRadiantPlus, p);
    const FeedbackParams fb = half_kappa(p, 50.0);
    const double h = 5e-3;
    auto sr_time = [&](const Trajectory& t) {
        const MeanFieldState target = t.final_state().jx >= 0.0 ? sr : parity(sr);
        return relaxation_time(t, target);
    };
    auto any_time = [&](const Trajectory& t) {
        const auto [kind, d] = nearest_fixed_point(p, t.final_state());
        return std::pair{kind, relaxation_time(t, fixed_point(kind, p))};
    };

    const Trajectory fine = integrate(p, fb, InitialCondition::bloch_diagonal(), 40000.0, h, {100});
    const Trajectory half = integrate(p, fb, InitialCondition::bloch_diagonal(), 40000.0, 0.5 * h, {200});
    const auto [kind_fb, t_fb] = any_time(fine);
    const auto [kind_half, t_half] = any_time(half);
    const auto sr_fb = sr_time(fine);
    const bool halving_ok =
        kind_fb == kind_half && t_fb && t_half && std::abs(*t_fb - *t_half) <= 0.01 * *t_half;

    const Trajectory open = integrate(p, FeedbackParams::open_loop(p.kappa), InitialCondition::bloch_diagonal(), 1e6, h,
                                      {10000});
    const auto [kind_open, t_open] = any_time(open);
    const bool open_slow = !sr_time(open) && !t_open;

    const bool pass = sr_fb && within_rel(*sr_fb, 20000.0, 0.30) && open_slow && halving_ok;
    std::string fb_text = sr_fb ? fmt("%.3f ms", *sr_fb / 1000.0) : std::string("never within 40 ms");
    std::string reached = t_fb ? fmt("%s after %.3f ms", std::string(to_string(kind_fb)).c_str(), *t_fb / 1000.0)
                               : std::string("no fixed point within 40 ms");
    rep.line(4, pass,
             fmt("feedback (kappa/2, 50 us): relaxation to super-radiant %s (ref 20 ms +-30%%); attractor reached: %s; "
                 "step halving %s (h=%g: %.4f ms, h=%g: %.4f ms); open loop over 1 s: %s (nearest %s, distance %.3g)",
                 fb_text.c_str(), reached.c_str(), halving_ok ? "consistent" : "inconsistent", h,
                 t_fb ? *t_fb / 1000.0 : NAN, 0.5 * h, t_half ? *t_half / 1000.0 : NAN,
                 open_slow ? "not relaxed" : "relaxed", std::string(to_string(kind_open)).c_str(),
                 nearest_fixed_point(p, open.final_state()).second));
}

void criterion5(Report& rep) {
    const ModelParams p = at_ratio(0.74);
    const MeanFieldState normal = fixed_point(FixedPointKind::Normal, p);
    const FeedbackParams fb = half_kappa(p, 100.0);
    const double re = units::to_2pi_hz(rightmost_root(linearize(p, normal, fb.gain(), fb.tau)).lambda.real());
    const Trajectory t = integrate(p, fb, InitialCondition::bloch_diagonal(), 100000.0, 5e-3, {200});
    // jz swing over consecutive quarters of the second half
    const std::size_t n = t.size();
    std::vector<double> swing;
    for (int q = 0; q < 4; ++q) {
        const std::size_t a = n / 2 + q * n / 8, b = n / 2 + (q + 1) * n / 8;
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = a; i < b; ++i) {
            lo = std::min(lo, t.states[i].jz);
            hi = std::max(hi, t.states[i].jz);
        }
        swing.push_back(hi - lo);
    }
    const bool persistent = swing.back() > 1e-3 && swing.back() >= 0.8 * swing.front();
    const auto [kind, d] = nearest_fixed_point(p, t.final_state());
    rep.line(5, re > 0.0 && persistent && d > 1e-3,
             fmt("Re lambda1 = %.3f 2pi Hz (> 0); jz swing over the quarters of 50-100 ms: %.4f %.4f %.4f %.4f "
                 "(non-decaying if the last >= 0.8 x the first and > 1e-3); distance to nearest fixed point (%s) %.3g",
                 re, swing[0], swing[1], swing[2], swing[3], std::string(to_string(kind)).c_str(), d));
}

void criterion6(Report& rep) {
    std::string text;
    bool pass = true;
    const auto taus = tau_grid(150.0, 151);
    for (auto [r, kind] : {std::pair{0.74, FixedPointKind::Normal}, std::pair{1.1, FixedPointKind::SuperRadiantPlus}}) {
        const ModelParams p = at_ratio(r);
        const double open = rightmost_root(linearize(p, fixed_point(kind, p))).lambda.real();
        const TauScan scan = scan_tau(p, kind, 0.1 * 0.5 * p.kappa, taus);
        const auto& best = scan.minimum();
        const double gain = best.root.lambda.real() / open;
        pass = pass && gain >= 10.0;
        text += fmt("%s at %.2f g_c: open %.4f, best %.4f 2pi Hz at tau=%g us, improvement %.1fx; ",
                    std::string(to_string(kind)).c_str(), r, units::to_2pi_hz(open), re_hz(best.root), best.tau, gain);
    }
    rep.line(6, pass, text + "required >= 10x");
}

json run_json(const std::string& config_text, const std::filesystem::path& dir) {
    const ScenarioConfig cfg = parse_config(config_text);
    const RunOutcome out = run_scenario(cfg, dir);
    std::filesystem::remove_all(dir);
    if (out.exit_code != kExitOk) throw std::runtime_error("run failed: " + out.summary_json);
    return json::parse(out.summary_json);
}

void criterion7(Report& rep) {
    const auto dir = std::filesystem::temp_directory_path() / "tdas_acceptance_ramp";
    std::string text;
    bool pass = true;
    for (const char* id : {"fig6", "fig7"}) {
        for (const std::string& cfg : figure_preset(id)) {
            const json s = run_json(cfg, dir);
            for (const auto& r : s.at("results").at("runs")) {
                const bool with_fb = r.at("feedback").at("k_radus").get<double>() > 0.0 &&
                                     r.at("feedback").at("tau_us").get<double>() > 0.0;
                const double t0 = r.at("t0_us").get<double>() / 1000.0;
                const double dist = r.at("relative_distance").get<double>();
                const double ratio = r.at("photon_ratio").get<double>();
                const double tail = r.at("tail_photon_ratio").get<double>();
                bool ok;
                if (with_fb) {
                    ok = dist < 0.02;
                } else if (std::string(id) == "fig7") {
                    ok = ratio < 0.10;
                } else {
                    ok = true; // open loop of fig6 is informational
                }
                pass = pass && ok;
                text += fmt("%s t0=%g ms %s: distance %.4f, |alpha|^2/target %.3g (tail mean %.3g)%s; ", id, t0,
                            with_fb ? "feedback" : "open loop", dist, ratio, tail, ok ? "" : " [out of bounds]");
            }
        }
    }
    rep.line(7, pass, text + "feedback runs within 2% of the target; fig7 open loop below 10% of the target photon number");
}

void criterion8(Report& rep) {
    const ModelParams p = ModelParams::experiment();
    std::string text;
    bool pass = true;
    for (CriticalSide side : {CriticalSide::Below, CriticalSide::Above}) {
        const auto grid = exponent_grid(side, kExponentWindowLo, kExponentWindowHi, kExponentPoints);
        const auto open = sweep_fluctuations(p, side, 0.0, 0.0, grid);
        const auto fb = sweep_fluctuations(p, side, 0.5 * p.kappa, 50.0, grid);
        std::vector<double> fo, ff;
        double ratio_lo = 1e300, ratio_hi = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!open[i].converged || !fb[i].converged) throw std::runtime_error("fluctuation sweep diverged");
            fo.push_back(open[i].fluct);
            ff.push_back(fb[i].fluct);
            ratio_lo = std::min(ratio_lo, fo.back() / ff.back());
            ratio_hi = std::max(ratio_hi, fo.back() / ff.back());
        }
        const double eo = fit_flux_exponent(grid, fo).exponent, ef = fit_flux_exponent(grid, ff).exponent;
        const bool ok = std::abs(eo - 1.0) <= 0.05 && std::abs(ef - 1.0) <= 0.05 && ratio_lo >= 100.0 / 3.0 &&
                        ratio_hi <= 300.0;
        pass = pass && ok;
        text += fmt("%s: exponent open %.4f, feedback %.4f; fluctuation ratio %.1f..%.1f; ",
                    std::string(to_string(side)).c_str(), eo, ef, ratio_lo, ratio_hi);
    }
    rep.line(8, pass,
             text + fmt("window |1-g/g_c| in [%g, %g]; required 1.0 +- 0.05 and ratio 100 within a factor 3",
                        kExponentWindowLo, kExponentWindowHi));
}

void criterion9(Report& rep) {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const char* name) {
        if (!ok) failed.emplace_back(name);
    };
    const ModelParams sr_p = at_ratio(1.1);
    const MeanFieldState sr = fixed_point(FixedPointKind::SuperRadiantPlus, sr_p);

    {
        const Trajectory t = integrate(sr_p, half_kappa(sr_p, 50.0), InitialCondition::bloch_diagonal(), 100.0, 1e-3,
                                       {1000});
        check(max_spin_norm_defect(t) < 1e-9, "spin norm");
    }
    for (auto [r, kind] : {std::pair{0.74, FixedPointKind::Normal}, std::pair{1.1, FixedPointKind::SuperRadiantPlus},
                           std::pair{0.74, FixedPointKind::Inverted}}) {
        const ModelParams p = at_ratio(r);
        const MeanFieldState fp = fixed_point(kind, p);
        const LinearizedSystem sys = linearize(p, fp);
        Eigen::EigenSolver<Eigen::Matrix4d> es(sys.a_prime);
        double best_re = -1e300;
        cplx best{};
        for (int i = 0; i < 4; ++i) {
            if (es.eigenvalues()(i).real() > best_re) {
                best_re = es.eigenvalues()(i).real();
                best = es.eigenvalues()(i);
            }
        }
        best = {best.real(), std::abs(best.imag())};
        check(std::abs(rightmost_root(sys).lambda - best) <= 1e-8 * std::abs(best), "k=0 roots");
        const Eigen::Matrix4d fd = oracle::fd_reduced_jacobian(oracle::experiment(p.g), fp.to_array());
        check((sys.a_prime - fd).norm() <= 1e-6 * sys.a_prime.norm(), "Jacobian");
    }
    {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const bool above = i % 2 == 1;
            const ModelParams p = at_ratio(above ? 1.02 + unit(rng) : 0.3 + 0.68 * unit(rng));
            const HPCoefficients c =
                hp_coefficients(p, fixed_point(above ? FixedPointKind::SuperRadiantPlus : FixedPointKind::Normal, p));
            const double k = 0.5 * p.kappa * unit(rng), tau = 150.0 * unit(rng), nu = 400.0 * (unit(rng) - 0.5);
            const SpectralFunctions sf(c, p.kappa, k, tau);
            const FourierSystem sys = dicke_fourier_system(c, p.kappa, k, tau);
            const Eigen::MatrixXcd T = fourier_generic(sys.A, sys.gamma, sys.delays, nu);
            const ModeTransfer a = closed_form_a(sf, nu), b = closed_form_b(sf, nu);
            const double sa = std::abs(T(0, 0)) + std::abs(T(0, 1)), sb = std::abs(T(2, 0)) + std::abs(T(2, 1));
            worst = std::max({worst, std::abs(a.from_in - T(0, 0)) / sa, std::abs(a.from_in_dagger - T(0, 1)) / sa,
                              std::abs(b.from_in - T(2, 0)) / sb, std::abs(b.from_in_dagger - T(2, 1)) / sb});
        }
        check(worst < 1e-10, "closed-form Fourier");
    }
    for (double r : {1.01, 1.1, 1.5}) {
        const ModelParams p = at_ratio(r);
        const MeanFieldAmplitudes m = mean_field_amplitudes(fixed_point(FixedPointKind::SuperRadiantPlus, p), p.N);
        const double N = p.N, b2 = m.b0 * m.b0;
        const double t1 = 4.0 * p.g * m.a0.real() * (0.5 * N - b2) / std::sqrt(N * (N - b2));
        const double t2 = p.omega0 * m.b0, t3 = p.U * m.b0 * std::norm(m.a0) / N;
        check(std::abs(t1 + t2 + t3) <= 1e-10 * (std::abs(t1) + std::abs(t2) + std::abs(t3)), "linear-term cancellation");
    }
    {
        const Trajectory t = integrate(sr_p, half_kappa(sr_p, 50.0), InitialCondition::explicit_state(sr), 2000.0,
                                       5e-3, {1000});
        double worst = 0.0;
        for (const auto& x : t.states) worst = std::max(worst, distance(x, sr));
        check(worst < 1e-12, "non-invasiveness");
    }
    std::string text = "spin norm, k=0 roots, Jacobian, closed-form Fourier (1000 draws), linear-term cancellation, "
                       "non-invasiveness";
    if (!failed.empty()) {
        text += "; failed:";
        for (const auto& f : failed) text += " " + f;
    }
    rep.line(9, failed.empty(), text);
}

} // namespace

int main(int argc, char** argv) {
    bool strict = false;
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--strict") == 0) strict = true;
        else only.push_back(std::atoi(argv[i]));
    }
    void (*criteria[])(Report&) = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                   criterion6, criterion7, criterion8, criterion9};
    Report rep;
    for (int id = 1; id <= 9; ++id) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[id - 1](rep);
        } catch (const std::exception& e) {
            rep.line(id, false, std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("  (criterion %d took %.1f s)\n", id, secs);
    }
    std::printf("%d criteria failed\n", rep.failures);
    return strict && rep.failures > 0 ? 1 : 0;
}
