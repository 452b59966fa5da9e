// fluctuations.hpp: linearized quantum fluctuations around a mean-field
// fixed point, in Fourier space, with the delayed feedback loop.
//
// Conventions: O(nu) = (2 pi)^{-1/2} int e^{i nu t} O(t) dt, so a mode
// e^{lambda t} shows up as a zero of D at nu = i lambda. Unstable modes are
// zeros in the upper half plane.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tdas/model.hpp"

namespace tdas {

// Coefficients of the quadratic Holstein-Primakoff Hamiltonian.
struct HPCoefficients {
    double omega_a{0.0};
    double omega_b{0.0};
    double lambda1_c{0.0};
    double lambda2_c{0.0};
    double chi{0.0};

    [[nodiscard]] cplx G() const { return {lambda1_c, -lambda2_c}; }
};

// Throws DomainError if jz >= 1/2.
[[nodiscard]] HPCoefficients hp_coefficients(const ModelParams& p, const MeanFieldState& fp);

// Macroscopic amplitudes a0 = sqrt(N) alpha and b0 = sqrt(N (1/2 + jz)) >= 0.
struct MeanFieldAmplitudes {
    cplx a0{};
    double b0{0.0};
    double N{1.0};

    [[nodiscard]] cplx alpha() const { return a0 / std::sqrt(N); }
    [[nodiscard]] double beta() const { return b0 / std::sqrt(N); }
};

[[nodiscard]] MeanFieldAmplitudes mean_field_amplitudes(const MeanFieldState& fp, double N);

// Coefficient of (db + db^dagger) in the expanded Hamiltonian,
//   2 g (a0 + a0*) (N/2 - b0^2) / sqrt(N (N - b0^2)) + omega0 b0 + U b0 |a0|^2 / N,
// divided by sqrt(N). It vanishes at a fixed point.
[[nodiscard]] double linear_term_coefficient(const ModelParams& p, const MeanFieldAmplitudes& m);

// 1 + (k / kappa)(1 - cos nu tau).
[[nodiscard]] double input_noise_spectrum(double nu, double kappa, double k, double tau);

class SpectralFunctions {
public:
    SpectralFunctions(const HPCoefficients& c, double kappa, double k, double tau);

    // kappa - i nu - k (e^{i nu tau} - 1)
    [[nodiscard]] cplx damping(cplx nu) const;
    [[nodiscard]] cplx N(cplx nu) const;
    [[nodiscard]] cplx D(cplx nu) const;
    [[nodiscard]] cplx D_derivative(cplx nu) const;
    [[nodiscard]] double S_in(double nu) const { return input_noise_spectrum(nu, kappa_, k_, tau_); }
    // 4 omega_b^2 |G^2 / D|^2 S_in
    [[nodiscard]] double integrand(double nu) const;
    // Same without the feedback noise factor, i.e. S_in replaced by 1.
    [[nodiscard]] double integrand_white(double nu) const;

    [[nodiscard]] const HPCoefficients& coefficients() const { return c_; }
    [[nodiscard]] double kappa() const { return kappa_; }
    [[nodiscard]] double k() const { return k_; }
    [[nodiscard]] double tau() const { return tau_; }
    // Scale beyond which |D(nu)| ~ nu^4 dominates.
    [[nodiscard]] double frequency_scale() const;

private:
    HPCoefficients c_;
    double kappa_, k_, tau_;
};

// Closed-form transfer coefficients: the response of a mode to a_in(nu) and
// to a_in^dagger(-nu).
struct ModeTransfer {
    cplx from_in{};
    cplx from_in_dagger{};
};
[[nodiscard]] ModeTransfer closed_form_a(const SpectralFunctions& sf, double nu);
[[nodiscard]] ModeTransfer closed_form_b(const SpectralFunctions& sf, double nu);

// A delayed coupling K a(t - tau).
struct DelayTerm {
    Eigen::MatrixXcd K;
    double tau{0.0};
};

// Transfer matrix [i nu + A - Gamma + sum K_i e^{i nu tau_i}]^{-1} sqrt(2 Gamma).
// Throws SingularAtFrequency if the reciprocal condition estimate is below 1e-12.
[[nodiscard]] Eigen::MatrixXcd fourier_generic(const Eigen::MatrixXcd& A,
                                               const Eigen::VectorXd& gamma,
                                               std::span<const DelayTerm> delays, double nu);

// Linear system of (da, da^dagger, db, db^dagger) in the form accepted by
// fourier_generic. The -k da(t) part of the feedback sits in A.
struct FourierSystem {
    Eigen::MatrixXcd A;
    Eigen::VectorXd gamma;
    std::vector<DelayTerm> delays;
};
[[nodiscard]] FourierSystem dicke_fourier_system(const HPCoefficients& c, double kappa, double k,
                                                 double tau);

// Zeros of D in the upper half plane, counted by the argument principle along
// the real axis closed by a large semicircle. Throws DivergentFluctuations if
// D (nearly) vanishes on the real axis.
[[nodiscard]] int unstable_mode_count(const SpectralFunctions& sf);

// Complex zeros of D within `band` of the real axis, nu >= 0 side.
[[nodiscard]] std::vector<cplx> near_axis_zeros(const SpectralFunctions& sf, double nu_max,
                                                double band);

struct FluctuationOptions {
    double rel_tol{1e-9};
    // Truncate at nu_max where the nu^{-7} tail bound drops below tail_tol of the integral.
    double tail_tol{1e-9};
    // Lower bound on the initial truncation point.
    double min_nu_max{0.0};
    // Use S_in = 1 instead of the delayed-vacuum spectrum (for comparisons).
    bool white_noise{false};
};

struct FluctuationResult {
    double value{0.0};
    double error_estimate{0.0};
    double nu_max{0.0};
    std::size_t panels{0};
};

// <da^dagger da>_ss = (kappa / pi) int 4 omega_b^2 |G^2 / D|^2 S_in dnu.
// Throws DivergentFluctuations if the fixed point is linearly unstable.
[[nodiscard]] FluctuationResult steady_state_photon_fluct(const ModelParams& p,
                                                          const MeanFieldState& fp, double k,
                                                          double tau,
                                                          const FluctuationOptions& opts = {});
[[nodiscard]] FluctuationResult steady_state_photon_fluct(const SpectralFunctions& sf,
                                                          const FluctuationOptions& opts = {});

// Which side of the transition a sweep approaches g_c from. Below uses the
// normal phase, Above the super-radiant phase with jx > 0 (b0 > 0).
enum class CriticalSide { Below, Above };
[[nodiscard]] std::string_view to_string(CriticalSide side);
[[nodiscard]] CriticalSide critical_side_from_string(std::string_view name);

struct SweepPoint {
    double g_over_gc{0.0};
    FixedPointKind phase{FixedPointKind::Normal};
    double k{0.0};
    double tau{0.0};
    double fluct{0.0};
    bool converged{false};
    std::string error{};
};

// One point per ratio g / g_c. Failures (e.g. divergence) are recorded, not thrown.
[[nodiscard]] std::vector<SweepPoint> sweep_fluctuations(const ModelParams& p, CriticalSide side,
                                                         double k, double tau,
                                                         std::span<const double> g_over_gc,
                                                         const FluctuationOptions& opts = {});
// Serial reference for sweep_fluctuations.
[[nodiscard]] std::vector<SweepPoint> sweep_fluctuations_serial(
    const ModelParams& p, CriticalSide side, double k, double tau,
    std::span<const double> g_over_gc, const FluctuationOptions& opts = {});

struct ExponentFit {
    double exponent{0.0};
    double standard_error{0.0};
    double intercept{0.0};
    std::size_t points{0};
};

// Fits log[(g_c / g) sqrt(f)] = c + s log|1 - g/g_c| by least squares and
// reports the exponent of the fluctuation itself, -2 s.
[[nodiscard]] ExponentFit fit_flux_exponent(std::span<const double> g_over_gc,
                                            std::span<const double> fluct);

// |1 - g/g_c| log-spaced over [lo, hi], n points, mapped to g / g_c on the given side.
[[nodiscard]] std::vector<double> exponent_grid(CriticalSide side, double lo, double hi,
                                                std::size_t n);

inline constexpr double kExponentWindowLo = 1e-4;
inline constexpr double kExponentWindowHi = 1e-2;
inline constexpr std::size_t kExponentPoints = 20;

// Sweep plus fit. Propagates DivergentFluctuations from any grid point.
[[nodiscard]] ExponentFit photon_flux_exponent(const ModelParams& p, double k, double tau,
                                               CriticalSide side,
                                               std::span<const double> g_over_gc,
                                               const FluctuationOptions& opts = {});

} // namespace tdas
