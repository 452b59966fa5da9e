// model.hpp: open Dicke model parameters, mean-field vector field and the
// optical feedback network algebra.

#pragma once

#include <array>
#include <complex>
#include <numbers>
#include <string_view>

#include <Eigen/Dense>

namespace tdas {

using cplx = std::complex<double>;

// Physical constants of the open Dicke model, internal units (rad/us).
struct ModelParams {
    double omega0{0.0}; // collective atomic frequency
    double omega{0.0};  // cavity-pump detuning
    double U{0.0};      // dispersive nonlinearity
    double kappa{0.0};  // cavity field decay rate
    double g{0.0};      // linear coupling
    double N{1e5};      // atom count, only used to build near-normal initial states

    // Throws InvariantViolation if kappa <= 0, omega0 <= 0 or N < 1.
    void validate() const;

    [[nodiscard]] ModelParams with_coupling(double coupling) const {
        ModelParams p = *this;
        p.g = coupling;
        return p;
    }

    // {omega0, omega, U, kappa} = {8.3e-3, 14.0, -8.0, 1.25} * 2pi MHz, g = 0.
    static ModelParams experiment();
};

// Optical loop: two mirrors (b, c), beam-splitter amplitudes r, s with
// r^2 + s^2 = 2, loop phase phi and delay tau [us].
struct FeedbackParams {
    double kappa_b{0.0};
    double kappa_c{0.0};
    double r{0.0};
    double s{std::numbers::sqrt2};
    double phi{0.0};
    double tau{0.0};

    // Gain k = r s sqrt(kappa_b kappa_c); throws InvariantViolation when the
    // beam-splitter amplitudes are inadmissible.
    [[nodiscard]] double gain() const;

    void validate() const;

    // No feedback: r = 0, s = sqrt(2), symmetric mirrors.
    static FeedbackParams open_loop(double kappa);
    // Symmetric mirrors kappa_b = kappa_c = kappa/2 and r, s chosen (r <= s)
    // so that the gain equals k. Requires 0 <= k <= kappa/2.
    static FeedbackParams with_gain(double kappa, double k, double tau);
};

[[nodiscard]] double feedback_gain(const FeedbackParams& f);

// Field incident on mirror b coming from the cavity output at t and t - tau
// (vacuum contributions dropped).
[[nodiscard]] cplx effective_input_transform(const FeedbackParams& f, cplx c_out_now,
                                             cplx c_out_delayed);

// Beam-splitter matrices of the feedback loop. S1 maps (nu_1, c_out) to
// (f_1, f_2); S2 maps (e^{i phi} f_2(t - tau), f_1) to (b_in, nu_2).
[[nodiscard]] Eigen::Matrix2cd beam_splitter_s1(const FeedbackParams& f);
[[nodiscard]] Eigen::Matrix2cd beam_splitter_s2(const FeedbackParams& f);

// Five real mean-field variables: alpha = x1 + i x2 = <a>/sqrt(N), j = <J>/N.
struct MeanFieldState {
    double x1{0.0};
    double x2{0.0};
    double jx{0.0};
    double jy{0.0};
    double jz{0.0};

    [[nodiscard]] cplx alpha() const { return {x1, x2}; }
    [[nodiscard]] double photon_number() const { return x1 * x1 + x2 * x2; }
    [[nodiscard]] double spin_norm2() const { return jx * jx + jy * jy + jz * jz; }
    // |jx^2 + jy^2 + jz^2 - 1/4|
    [[nodiscard]] double spin_norm_defect() const;

    [[nodiscard]] std::array<double, 5> to_array() const { return {x1, x2, jx, jy, jz}; }
    static MeanFieldState from_array(const std::array<double, 5>& v) {
        return {v[0], v[1], v[2], v[3], v[4]};
    }

    friend bool operator==(const MeanFieldState&, const MeanFieldState&) = default;
};

[[nodiscard]] double distance(const MeanFieldState& a, const MeanFieldState& b);
[[nodiscard]] double norm(const MeanFieldState& a);
[[nodiscard]] double max_abs(const MeanFieldState& a);

// Z2 symmetry a -> -a, Jx -> -Jx, Jy -> -Jy (rotation by pi about z).
[[nodiscard]] MeanFieldState parity(const MeanFieldState& x);

enum class FixedPointKind { Normal, Inverted, SuperRadiantPlus, SuperRadiantMinus };

[[nodiscard]] std::string_view to_string(FixedPointKind kind);
// Accepts normal, inverted, sr_plus, sr_minus. Throws DomainError otherwise.
[[nodiscard]] FixedPointKind fixed_point_kind_from_string(std::string_view name);

// g_c = sqrt(omega0 [(omega - U/2)^2 + kappa^2] / (4 (omega - U/2))), the
// coupling where the normal phase loses stability. DomainError if
// omega - U/2 <= 0.
[[nodiscard]] double critical_coupling(const ModelParams& p);

// Coupling at which the super-radiant pair appears. Equals critical_coupling
// when omega - U/2 > 0; for omega + U/2 < 0 the pair branches off the
// inverted state instead, at sqrt(omega0 [(omega + U/2)^2 + kappa^2] /
// (4 |omega + U/2|)). DomainError if neither regime applies.
[[nodiscard]] double threshold_coupling(const ModelParams& p);

// Below this |U| the U = 0 super-radiant formula is used.
inline constexpr double kUZeroThreshold = 1e-9;

[[nodiscard]] MeanFieldState fixed_point(FixedPointKind kind, const ModelParams& p);

// Instantaneous part of the mean-field equations; the delayed feedback term
// k (x(t - tau) - x(t)) on x1, x2 is added by the integrator.
[[nodiscard]] MeanFieldState mean_field_rhs(const MeanFieldState& x, const ModelParams& p);

} // namespace tdas
