#include "tdas/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdas/errors.hpp"
#include "tdas/units.hpp"

namespace tdas {

namespace {

constexpr double kBeamSplitterTol = 1e-12;
// Slack when accepting a super-radiant j_z root on the Bloch sphere.
constexpr double kBlochSlack = 1e-13;

std::string describe_rs(double r, double s) {
    std::ostringstream os;
    os.precision(17);
    os << "beam splitter amplitudes r=" << r << ", s=" << s << " violate r,s >= 0, r^2+s^2=2";
    return os.str();
}

} // namespace

void ModelParams::validate() const {
    if (!(kappa > 0.0)) throw InvariantViolation("kappa must be positive");
    if (!(omega0 > 0.0)) throw InvariantViolation("omega0 must be positive");
    if (!(N >= 1.0)) throw InvariantViolation("N must be at least 1");
    if (!std::isfinite(omega) || !std::isfinite(U) || !std::isfinite(g)) {
        throw InvariantViolation("model parameters must be finite");
    }
}

ModelParams ModelParams::experiment() {
    ModelParams p;
    p.omega0 = units::from_2pi_mhz(8.3e-3);
    p.omega = units::from_2pi_mhz(14.0);
    p.U = units::from_2pi_mhz(-8.0);
    p.kappa = units::from_2pi_mhz(1.25);
    return p;
}

double FeedbackParams::gain() const { return feedback_gain(*this); }

void FeedbackParams::validate() const {
    (void)feedback_gain(*this);
    if (!(kappa_b >= 0.0) || !(kappa_c >= 0.0)) {
        throw InvariantViolation("mirror decay rates must be nonnegative");
    }
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvariantViolation("tau must be >= 0");
}

FeedbackParams FeedbackParams::open_loop(double kappa) {
    FeedbackParams f;
    f.kappa_b = f.kappa_c = 0.5 * kappa;
    f.r = 0.0;
    f.s = std::numbers::sqrt2;
    return f;
}

FeedbackParams FeedbackParams::with_gain(double kappa, double k, double tau) {
    const double kmax = 0.5 * kappa;
    if (!(k >= 0.0) || k > kmax * (1.0 + 1e-14)) {
        throw InvariantViolation("requested gain outside [0, kappa/2]");
    }
    // r s = q, r^2 + s^2 = 2  =>  r^2 = 1 - sqrt(1 - q^2)
    const double q = std::min(k / kmax, 1.0);
    const double root = std::sqrt(std::max(0.0, 1.0 - q * q));
    FeedbackParams f;
    f.kappa_b = f.kappa_c = kmax;
    f.r = std::sqrt(1.0 - root);
    f.s = std::sqrt(1.0 + root);
    f.tau = tau;
    return f;
}

double feedback_gain(const FeedbackParams& f) {
    if (!(f.r >= 0.0) || !(f.s >= 0.0) ||
        std::abs(f.r * f.r + f.s * f.s - 2.0) > kBeamSplitterTol) {
        throw InvariantViolation(describe_rs(f.r, f.s));
    }
    return f.r * f.s * std::sqrt(f.kappa_b * f.kappa_c);
}

cplx effective_input_transform(const FeedbackParams& f, cplx c_out_now, cplx c_out_delayed) {
    return 0.5 * f.r * f.s * (c_out_now - c_out_delayed);
}

Eigen::Matrix2cd beam_splitter_s1(const FeedbackParams& f) {
    const cplx half = std::polar(1.0, 0.5 * f.phi);
    Eigen::Matrix2cd m;
    m << f.s, -f.r * half, f.r * std::conj(half), f.s;
    return (std::conj(half) / std::numbers::sqrt2) * m;
}

Eigen::Matrix2cd beam_splitter_s2(const FeedbackParams& f) {
    const cplx half = std::polar(1.0, 0.5 * f.phi);
    Eigen::Matrix2cd m;
    m << -f.r, -f.s * half, f.s * std::conj(half), -f.r;
    return (std::conj(half) / std::numbers::sqrt2) * m;
}

double MeanFieldState::spin_norm_defect() const { return std::abs(spin_norm2() - 0.25); }

double distance(const MeanFieldState& a, const MeanFieldState& b) {
    const double d[5] = {a.x1 - b.x1, a.x2 - b.x2, a.jx - b.jx, a.jy - b.jy, a.jz - b.jz};
    double s = 0.0;
    for (double v : d) s += v * v;
    return std::sqrt(s);
}

double norm(const MeanFieldState& a) { return distance(a, MeanFieldState{}); }

double max_abs(const MeanFieldState& a) {
    return std::max({std::abs(a.x1), std::abs(a.x2), std::abs(a.jx), std::abs(a.jy),
                     std::abs(a.jz)});
}

MeanFieldState parity(const MeanFieldState& x) { return {-x.x1, -x.x2, -x.jx, -x.jy, x.jz}; }

std::string_view to_string(FixedPointKind kind) {
    switch (kind) {
    case FixedPointKind::Normal: return "normal";
    case FixedPointKind::Inverted: return "inverted";
    case FixedPointKind::SuperRadiantPlus: return "sr_plus";
    case FixedPointKind::SuperRadiantMinus: return "sr_minus";
    }
    return "unknown";
}

FixedPointKind fixed_point_kind_from_string(std::string_view name) {
    if (name == "normal") return FixedPointKind::Normal;
    if (name == "inverted") return FixedPointKind::Inverted;
    if (name == "sr_plus" || name == "super_radiant") return FixedPointKind::SuperRadiantPlus;
    if (name == "sr_minus") return FixedPointKind::SuperRadiantMinus;
    throw DomainError("unknown fixed point kind '" + std::string(name) + "'");
}

double critical_coupling(const ModelParams& p) {
    const double detuning = p.omega - 0.5 * p.U;
    if (!(detuning > 0.0)) {
        throw DomainError("critical coupling formula requires omega - U/2 > 0");
    }
    return std::sqrt(p.omega0 * (detuning * detuning + p.kappa * p.kappa) / (4.0 * detuning));
}

double threshold_coupling(const ModelParams& p) {
    if (p.omega - 0.5 * p.U > 0.0) return critical_coupling(p);
    const double detuning = p.omega + 0.5 * p.U;
    if (!(detuning < 0.0)) {
        throw DomainError("no super-radiant threshold for omega - U/2 <= 0 <= omega + U/2");
    }
    return std::sqrt(p.omega0 * (detuning * detuning + p.kappa * p.kappa) /
                     (4.0 * std::abs(detuning)));
}

MeanFieldState fixed_point(FixedPointKind kind, const ModelParams& p) {
    switch (kind) {
    case FixedPointKind::Normal: return {0.0, 0.0, 0.0, 0.0, -0.5};
    case FixedPointKind::Inverted: return {0.0, 0.0, 0.0, 0.0, 0.5};
    default: break;
    }

    const double g = p.g;
    const double gth = threshold_coupling(p);
    if (!(g > gth)) {
        throw NotAFixedPoint("super-radiant fixed point requires g above the threshold coupling");
    }

    double jz = 0.0;
    if (std::abs(p.U) < kUZeroThreshold) {
        const double gc = critical_coupling(p);
        jz = -gc * gc / (2.0 * g * g);
    } else {
        const double U = p.U;
        const double num = g * g * (4.0 * p.omega * p.omega - U * U) - p.omega0 * U * p.kappa * p.kappa;
        const double den = U * U * (p.omega0 * U + 4.0 * g * g);
        const double radicand = num / den;
        if (!(radicand >= 0.0)) throw DomainError("super-radiant j_z radicand is negative");
        const double centre = -p.omega / U;
        const double lower = centre - std::sqrt(radicand);
        const double upper = centre + std::sqrt(radicand);
        if (std::abs(lower) <= 0.5 + kBlochSlack) {
            jz = lower;
        } else if (std::abs(upper) <= 0.5 + kBlochSlack) {
            jz = upper;
        } else {
            throw DomainError("no super-radiant j_z root on the Bloch sphere");
        }
    }
    jz = std::clamp(jz, -0.5, 0.5);

    const double jx_mag = std::sqrt(std::max(0.0, 0.25 - jz * jz));
    const double jx = kind == FixedPointKind::SuperRadiantPlus ? jx_mag : -jx_mag;
    const cplx alpha = -2.0 * g * jx / cplx(p.omega + p.U * jz, -p.kappa);
    return {alpha.real(), alpha.imag(), jx, 0.0, jz};
}

MeanFieldState mean_field_rhs(const MeanFieldState& x, const ModelParams& p) {
    const double cavity = p.omega + p.U * x.jz;
    const double spin = p.omega0 + p.U * x.photon_number();
    return {
        -p.kappa * x.x1 + cavity * x.x2,
        -p.kappa * x.x2 - cavity * x.x1 - 2.0 * p.g * x.jx,
        -spin * x.jy,
        spin * x.jx - 4.0 * p.g * x.x1 * x.jz,
        4.0 * p.g * x.x1 * x.jy,
    };
}

} // namespace tdas
