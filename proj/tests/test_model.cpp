#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "tdas/errors.hpp"
#include "tdas/model.hpp"
#include "tdas/units.hpp"

using namespace tdas;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams at_ratio(double r) {
    ModelParams p = ModelParams::experiment();
    return p.with_coupling(r * critical_coupling(p));
}

oracle::Vec5 vec(const MeanFieldState& x) { return x.to_array(); }

} // namespace

TEST_CASE("unit conversions are exact inverses") {
    CHECK(units::from_2pi_mhz(1.0) == oracle::two_pi);
    CHECK_THAT(units::to_2pi_mhz(units::from_2pi_mhz(0.37)), WithinRel(0.37, 1e-15));
    CHECK_THAT(units::to_2pi_hz(units::from_2pi_hz(-26.0)), WithinRel(-26.0, 1e-14));
    CHECK(units::ms_to_us(20.0) == 20000.0);
}

TEST_CASE("critical coupling agrees with the rational closed form") {
    const ModelParams p = ModelParams::experiment();
    CHECK_THAT(units::to_2pi_mhz(critical_coupling(p)), WithinRel(oracle::gc_2pi_mhz_rational(), 1e-14));
    CHECK(threshold_coupling(p) == critical_coupling(p));
}

TEST_CASE("critical coupling rejects omega - U/2 <= 0") {
    ModelParams p = ModelParams::experiment();
    p.omega = units::from_2pi_mhz(-10.0);
    CHECK_THROWS_AS(critical_coupling(p), DomainError);
    // the inverted-state branch takes over, with omega~ = omega + U/2
    const double w = -10.0 - 4.0, k = 1.25;
    const double expect = std::sqrt(8.3e-3 * (w * w + k * k) / (4.0 * std::abs(w)));
    CHECK_THAT(units::to_2pi_mhz(threshold_coupling(p)), WithinRel(expect, 1e-13));
}

TEST_CASE("parameter validation") {
    ModelParams p = ModelParams::experiment();
    CHECK_NOTHROW(p.validate());
    p.kappa = 0.0;
    CHECK_THROWS_AS(p.validate(), InvariantViolation);
    p = ModelParams::experiment();
    p.N = 0.5;
    CHECK_THROWS_AS(p.validate(), InvariantViolation);
}

TEST_CASE("fixed points are stationary and on the Bloch sphere") {
    for (double r : {1.01, 1.1, 1.5, 3.0}) {
        const ModelParams p = at_ratio(r);
        for (auto kind : {FixedPointKind::SuperRadiantPlus, FixedPointKind::SuperRadiantMinus,
                          FixedPointKind::Normal, FixedPointKind::Inverted}) {
            const MeanFieldState x = fixed_point(kind, p);
            CHECK(max_abs(mean_field_rhs(x, p)) < 1e-12);
            CHECK(x.spin_norm_defect() < 1e-15);
        }
        const auto ref = oracle::superradiant(oracle::experiment(p.g));
        const auto got = vec(fixed_point(FixedPointKind::SuperRadiantPlus, p));
        for (int i = 0; i < 5; ++i) CHECK_THAT(got[i], WithinAbs(ref[i], 1e-14));
    }
}

TEST_CASE("super-radiant pair is a parity pair and absent below threshold") {
    const ModelParams p = at_ratio(1.1);
    CHECK(parity(fixed_point(FixedPointKind::SuperRadiantPlus, p)) ==
          fixed_point(FixedPointKind::SuperRadiantMinus, p));
    CHECK_THROWS_AS(fixed_point(FixedPointKind::SuperRadiantPlus, at_ratio(0.9)), NotAFixedPoint);
}

TEST_CASE("U = 0 uses the g_c^2 / 2g^2 branch") {
    ModelParams p = ModelParams::experiment();
    p.U = 0.0;
    p.g = 1.3 * critical_coupling(p);
    const MeanFieldState x = fixed_point(FixedPointKind::SuperRadiantPlus, p);
    CHECK_THAT(x.jz, WithinRel(-1.0 / (2.0 * 1.3 * 1.3), 1e-14));
    CHECK(max_abs(mean_field_rhs(x, p)) < 1e-12);
}

TEST_CASE("mean-field rhs matches the reference equations") {
    const ModelParams p = at_ratio(0.8);
    const oracle::Params q = oracle::experiment(p.g);
    const MeanFieldState x{0.01, -0.02, 0.3, 0.1, -0.39};
    const auto want = oracle::rhs(vec(x), q);
    const auto got = vec(mean_field_rhs(x, p));
    for (int i = 0; i < 5; ++i) CHECK_THAT(got[i], WithinAbs(want[i], 1e-13));
}

TEST_CASE("feedback gain and beam-splitter algebra") {
    const double kappa = units::from_2pi_mhz(1.25);
    for (double frac : {0.0, 0.1, 0.5, 1.0}) {
        const FeedbackParams f = FeedbackParams::with_gain(kappa, frac * kappa / 2.0, 50.0);
        CHECK_THAT(f.r * f.r + f.s * f.s, WithinAbs(2.0, 1e-12));
        CHECK_THAT(f.gain(), WithinAbs(frac * kappa / 2.0, 1e-12));
        CHECK(f.r <= f.s);
    }
    CHECK_THROWS_AS(FeedbackParams::with_gain(kappa, kappa, 1.0), InvariantViolation);

    FeedbackParams bad;
    bad.kappa_b = bad.kappa_c = 1.0;
    bad.r = 1.0;
    bad.s = 0.5;
    CHECK_THROWS_AS(bad.gain(), InvariantViolation);

    SECTION("matrix chain reproduces the effective input field") {
        for (double phi : {0.0, 0.7, -2.1}) {
            FeedbackParams f = FeedbackParams::with_gain(kappa, 0.3 * kappa, 10.0);
            f.phi = phi;
            const auto chain = oracle::beam_splitter_chain(f.r, f.s, phi);
            const cplx c_now{0.3, -1.1}, c_old{-0.4, 0.2};
            const cplx want = chain.now * c_now + chain.delayed * c_old;
            CHECK(std::abs(effective_input_transform(f, c_now, c_old) - want) < 1e-14);
            CHECK((beam_splitter_s1(f) * beam_splitter_s1(f).adjoint() - Eigen::Matrix2cd::Identity()).norm() < 1e-14);
            CHECK((beam_splitter_s2(f) * beam_splitter_s2(f).adjoint() - Eigen::Matrix2cd::Identity()).norm() < 1e-14);
        }
    }
}

TEST_CASE("parity image of the right-hand side is the right-hand side of the parity image") {
    const ModelParams p = at_ratio(1.3);
    const MeanFieldState x{0.02, -0.03, 0.2, 0.15, -0.41};
    CHECK(distance(mean_field_rhs(parity(x), p), parity(mean_field_rhs(x, p))) < 1e-15);
    CHECK(parity(parity(x)) == x);
}

TEST_CASE("fixed-point kind names round-trip") {
    for (auto kind : {FixedPointKind::Normal, FixedPointKind::Inverted, FixedPointKind::SuperRadiantPlus,
                      FixedPointKind::SuperRadiantMinus}) {
        CHECK(fixed_point_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(fixed_point_kind_from_string("sideways"), DomainError);
}
