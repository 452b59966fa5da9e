#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "tdas/dde.hpp"
#include "tdas/errors.hpp"
#include "tdas/units.hpp"

using namespace tdas;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams at_ratio(double r) {
    ModelParams p = ModelParams::experiment();
    return p.with_coupling(r * critical_coupling(p));
}

FeedbackParams half_kappa(const ModelParams& p, double tau) {
    return FeedbackParams::with_gain(p.kappa, 0.5 * p.kappa, tau);
}

} // namespace

TEST_CASE("open loop matches a plain RK4 integration step by step") {
    const ModelParams p = at_ratio(1.1);
    const double h = 2e-3;
    const std::size_t steps = 20000;
    const Trajectory traj = integrate(p, FeedbackParams::open_loop(p.kappa),
                                      InitialCondition::bloch_diagonal(), h * steps, h);
    const auto ref = oracle::rk4(oracle::experiment(p.g), InitialCondition::bloch_diagonal().state().to_array(),
                                 h, steps);
    REQUIRE(traj.size() == ref.size());
    double worst = 0.0;
    for (std::size_t n = 0; n < ref.size(); ++n) {
        const auto got = traj.states[n].to_array();
        for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(got[i] - ref[n][i]));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("tau = 0 with nonzero gain is the open-loop flow") {
    const ModelParams p = at_ratio(0.74);
    const auto a = integrate(p, half_kappa(p, 0.0), InitialCondition::bloch_diagonal(), 20.0, 5e-3);
    const auto b = integrate(p, FeedbackParams::open_loop(p.kappa), InitialCondition::bloch_diagonal(), 20.0, 5e-3);
    CHECK(distance(a.final_state(), b.final_state()) < 1e-13);
}

TEST_CASE("field-only linear delay problem matches its closed form on [0, 2 tau]") {
    // g = 0 freezes the spin, so alpha' = -c alpha + k alpha(t - tau) with c = kappa + k + i omega~.
    ModelParams p = ModelParams::experiment();
    p.g = 0.0;
    const double tau = 2.0, k = 0.5 * p.kappa, h = 1e-4;
    const MeanFieldState x0{0.3, -0.2, 0.0, 0.0, -0.5};
    const Trajectory traj = integrate(p, half_kappa(p, tau), InitialCondition::explicit_state(x0), 2.0 * tau, h);

    const cplx a0 = x0.alpha();
    const cplx c = p.kappa + k + cplx(0.0, p.omega + p.U * x0.jz);
    const cplx A = k * a0 / c, B = a0 - A;
    auto first = [&](double t) { return A + B * std::exp(-c * t); };
    auto second = [&](double t) {
        const double u = t - tau;
        return std::exp(-c * u) * first(tau) + k * (A * (1.0 - std::exp(-c * u)) / c + B * std::exp(-c * u) * u);
    };
    double worst = 0.0;
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const double t = traj.times[n];
        const cplx want = t <= tau ? first(t) : second(t);
        worst = std::max(worst, std::abs(traj.states[n].alpha() - want));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("spin norm is conserved to 1e-9 over 1e5 steps") {
    const ModelParams p = at_ratio(1.1);
    const Trajectory traj =
        integrate(p, half_kappa(p, 50.0), InitialCondition::bloch_diagonal(), 100.0, 1e-3, {100});
    CHECK(max_spin_norm_defect(traj) < 1e-9);
}

TEST_CASE("a fixed point history stays fixed under feedback") {
    const ModelParams p = at_ratio(1.1);
    const MeanFieldState sr = fixed_point(FixedPointKind::SuperRadiantPlus, p);
    const Trajectory traj =
        integrate(p, half_kappa(p, 50.0), InitialCondition::explicit_state(sr), 2000.0, 5e-3, {1000});
    double worst = 0.0;
    for (const auto& x : traj.states) worst = std::max(worst, distance(x, sr));
    CHECK(worst < 1e-12);
}

TEST_CASE("step halving converges at fourth order") {
    const ModelParams p = at_ratio(1.1);
    auto run = [&](double h) {
        return integrate(p, half_kappa(p, 5.0), InitialCondition::bloch_diagonal(), 40.0, h).final_state();
    };
    const auto x1 = run(0.01), x2 = run(0.005), x3 = run(0.0025);
    const double order = std::log2(distance(x1, x2) / distance(x2, x3));
    INFO("observed order " << order);
    CHECK(order >= 3.5);
}

TEST_CASE("parity image of the initial state gives the parity image trajectory") {
    const ModelParams p = at_ratio(1.1);
    const auto x0 = InitialCondition::bloch_diagonal().state();
    const auto a = integrate(p, half_kappa(p, 5.0), InitialCondition::explicit_state(x0), 50.0, 5e-3);
    const auto b = integrate(p, half_kappa(p, 5.0), InitialCondition::explicit_state(parity(x0)), 50.0, 5e-3);
    CHECK(distance(parity(a.final_state()), b.final_state()) < 1e-12);
}

TEST_CASE("integrate validates its arguments") {
    const ModelParams p = at_ratio(0.5);
    CHECK_THROWS_AS(integrate(p, half_kappa(p, 0.5), InitialCondition::bloch_diagonal(), 10.0, 1.0), StepTooLarge);
    CHECK_THROWS_AS(integrate(p, half_kappa(p, 0.5), InitialCondition::bloch_diagonal(), 10.0, -1e-3), DomainError);
    CHECK_THROWS_AS(integrate(p, half_kappa(p, 0.5), InitialCondition::bloch_diagonal(), 0.0, 1e-3), DomainError);
}

TEST_CASE("trajectory sampling is uniform and includes the final step") {
    const ModelParams p = at_ratio(0.5);
    const auto traj = integrate(p, half_kappa(p, 1.0), InitialCondition::bloch_diagonal(), 1.0, 1e-3, {7});
    CHECK(traj.times.front() == 0.0);
    CHECK_THAT(traj.times.back(), WithinAbs(1.0, 1e-12));
    for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
        CHECK_THAT(traj.times[i] - traj.times[i - 1], WithinRel(7e-3, 1e-9));
    }
}

TEST_CASE("default step resolves both the delay and the cavity frequency") {
    const ModelParams p = ModelParams::experiment();
    CHECK_THAT(default_step(p, 16.0), WithinRel(2.0 * std::numbers::pi / (50.0 * p.omega), 1e-15));
    CHECK_THAT(default_step(p, 1e-3), WithinRel(5e-5, 1e-15));
}

TEST_CASE("near-normal initial state is on the sphere") {
    const auto x = InitialCondition::near_normal(1e5).state();
    CHECK(x.spin_norm_defect() < 1e-15);
    CHECK_THAT(x.jx, WithinRel(1.0 / std::sqrt(1e5), 1e-15));
    CHECK(x.jz < 0.0);
}

TEST_CASE("ramp schedule follows sqrt(t / t0)") {
    const RampSchedule r{200.0, 3.0};
    CHECK(r.coupling(0.0) == 0.0);
    CHECK_THAT(r.coupling(50.0), WithinRel(1.5, 1e-15));
    CHECK(r.coupling(200.0) == 3.0);
    CHECK(r.coupling(1e6) == 3.0);
    double last = -1.0;
    for (double t = 0.0; t < 300.0; t += 7.0) {
        CHECK(r.coupling(t) >= last);
        last = r.coupling(t);
    }
}

TEST_CASE("below-threshold ramp stays next to the normal phase") {
    const ModelParams p = ModelParams::experiment();
    const RampSchedule ramp{2000.0, 0.9 * critical_coupling(p)};
    const auto traj = integrate_ramp(p, FeedbackParams::open_loop(p.kappa), ramp,
                                     InitialCondition::near_normal(1e5), 4000.0, 5e-3, {100});
    const MeanFieldState normal = fixed_point(FixedPointKind::Normal, p);
    double worst = 0.0;
    for (const auto& x : traj.states) worst = std::max(worst, distance(x, normal));
    CHECK(worst < 1e-2);
    CHECK(traj.couplings.back() == ramp.g_final);
}

TEST_CASE("low-pass filter") {
    SECTION("DC gain is one") {
        const std::vector<double> c(500, 0.37);
        for (double v : lowpass(c, 0.1, 2.0)) CHECK_THAT(v, WithinRel(0.37, 1e-14));
    }
    SECTION("a tone at ten times the cutoff drops by at least 99x") {
        const double cutoff = 1.0, w = 10.0, dt = 2e-3;
        std::vector<double> s(200000);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(w * dt * static_cast<double>(i));
        const auto y = lowpass(s, dt, cutoff);
        double amp = 0.0;
        for (std::size_t i = s.size() / 4; i < 3 * s.size() / 4; ++i) amp = std::max(amp, std::abs(y[i]));
        CHECK(amp <= 1.0 / 99.0);
    }
}

TEST_CASE("relaxation time") {
    const ModelParams p = at_ratio(1.1);
    const MeanFieldState sr = fixed_point(FixedPointKind::SuperRadiantPlus, p);
    const auto at_target = integrate(p, FeedbackParams::open_loop(p.kappa), InitialCondition::explicit_state(sr), 1.0, 1e-3);
    CHECK(relaxation_time(at_target, sr) == 0.0);
    const auto away = integrate(p, FeedbackParams::open_loop(p.kappa), InitialCondition::bloch_diagonal(), 1.0, 1e-3);
    CHECK_FALSE(relaxation_time(away, sr).has_value());
}

TEST_CASE("dense history interpolates cubic polynomials exactly") {
    // x(t) = t^3 in every slot, pushed with exact derivatives.
    const double h = 0.1;
    DenseHistory hist(h, 64, MeanFieldState{});
    for (int i = 0; i < 40; ++i) {
        const double t = h * i, v = t * t * t, d = 3.0 * t * t;
        hist.push({v, v, v, v, v}, {d, d, d, d, d});
    }
    for (double t : {2.05, 2.5, 3.333, 3.89}) {
        const auto x = hist.evaluate(t);
        CHECK_THAT(x.jz, WithinRel(t * t * t, 1e-12));
        double a = 0.0, b = 0.0;
        hist.evaluate_field(t, a, b);
        CHECK_THAT(b, WithinRel(t * t * t, 1e-12));
    }
}
