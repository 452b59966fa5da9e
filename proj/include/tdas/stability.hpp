// stability.hpp: characteristic roots of the linearized delayed mean-field
// equations around a fixed point.
//
// After eliminating j_z with the spin constraint the perturbation
// z = (dx1, dx2, djx, djy) obeys
//     z'(t) = A' z(t) + k B' (z(t - tau) - z(t)),   B' = diag(1, 1, 0, 0),
// with characteristic matrix Delta(lambda) = lambda I - A' - k (e^{-lambda tau} - 1) B'.
// Rates are in rad/us.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdas/model.hpp"

namespace tdas {

struct LinearizedSystem {
    Eigen::Matrix4d a_prime{Eigen::Matrix4d::Zero()};
    double k{0.0};
    double tau{0.0};
    double omega_tilde{0.0};  // omega + U jz
    double omega0_tilde{0.0}; // omega0 + U |alpha|^2
    MeanFieldState fixed_point{};
    ModelParams params{};

    [[nodiscard]] LinearizedSystem with_feedback(double gain, double delay) const {
        LinearizedSystem s = *this;
        s.k = gain;
        s.tau = delay;
        return s;
    }
    [[nodiscard]] bool has_delay() const { return k != 0.0 && tau > 0.0; }

    static Eigen::Matrix4d b_prime() { return Eigen::Vector4d(1.0, 1.0, 0.0, 0.0).asDiagonal(); }
};

// Throws DegenerateFixedPoint if |jz| <= 1e-9, NotAFixedPoint if the
// mean-field residual at fp exceeds 1e-9.
[[nodiscard]] LinearizedSystem linearize(const ModelParams& p, const MeanFieldState& fp,
                                         double k = 0.0, double tau = 0.0);

[[nodiscard]] Eigen::Matrix4cd char_matrix(const LinearizedSystem& sys, cplx lambda);
[[nodiscard]] cplx char_det(const LinearizedSystem& sys, cplx lambda);
// d/dlambda det Delta(lambda), from the principal 3x3 minors (Delta' is diagonal).
[[nodiscard]] cplx char_det_derivative(const LinearizedSystem& sys, cplx lambda);
// Hadamard bound prod_i |row_i(Delta)|, used to normalize residuals.
[[nodiscard]] double char_det_scale(const LinearizedSystem& sys, cplx lambda);

struct CharRoot {
    cplx lambda{};
    double residual{0.0};          // |det Delta(lambda)|
    double relative_residual{0.0}; // residual / char_det_scale
    int multiplicity_hint{1};
};

struct RootSearchOptions {
    int collocation_degree{40};
    // Rightmost collocation eigenvalues refined by Newton.
    int max_candidates{16};
    double accept_relative_residual{1e-10};
    int max_newton_iterations{60};
    // Search window: Re lambda in [-re_factor kappa, re_factor kappa],
    // |Im lambda| <= im_factor (|omega_tilde| + kappa).
    double window_re_factor{5.0};
    double window_im_factor{3.0};
    // Roots closer than dedup_factor * kappa are merged.
    double dedup_factor{1e-9};
    // Extra Newton seed, e.g. the previous root along a scan.
    std::optional<cplx> seed{};
};

// Eigenvalues of the Chebyshev pseudospectral discretization of the linear
// delayed system on [-tau, 0] (degree M gives a 4 (M + 1) square matrix).
[[nodiscard]] Eigen::VectorXcd collocation_eigenvalues(const LinearizedSystem& sys, int degree);

// Newton iteration on det Delta(lambda) = 0 from `start`.
[[nodiscard]] std::optional<CharRoot> refine_root(const LinearizedSystem& sys, cplx start,
                                                  const RootSearchOptions& opts = {});

// Every distinct root found inside the search window, Im >= 0
// representatives, sorted by decreasing real part. Throws SearchFailed if no
// candidate converges.
[[nodiscard]] std::vector<CharRoot> characteristic_roots(const LinearizedSystem& sys,
                                                         const RootSearchOptions& opts = {});

[[nodiscard]] CharRoot rightmost_root(const LinearizedSystem& sys,
                                      const RootSearchOptions& opts = {});

// Small-delay estimate lambda ~ lambda0 + lambda1 for fixed points with jy = 0.
struct ApproxRoot {
    cplx leading{};         // lambda^(0), purely imaginary
    double correction{0.0}; // lambda^(1)
    double residual{0.0};   // |det Delta| at the estimate

    [[nodiscard]] cplx lambda() const { return leading + correction; }
};

// Throws DomainError if jy != 0 or the lambda^(0) radicand is negative.
[[nodiscard]] ApproxRoot approx_rightmost(const LinearizedSystem& sys);

struct ScanPoint {
    double k{0.0};
    double tau{0.0};
    CharRoot root{};
    bool converged{false};
    // Set when the rightmost root hops to another branch between neighbours.
    bool branch_jump{false};
    std::string error{};
};

struct TauScan {
    std::vector<ScanPoint> points;
    std::optional<std::size_t> argmin{};          // minimal Re lambda1 over converged points
    std::optional<std::size_t> first_local_min{}; // first interior local minimum

    [[nodiscard]] const ScanPoint& minimum() const { return points.at(argmin.value()); }
};

// Rightmost root along a sorted tau grid with warm-start continuation.
// Throws SearchFailed (with the grid index) on the first failing point.
[[nodiscard]] TauScan scan_tau(const ModelParams& p, FixedPointKind kind, double k,
                               std::span<const double> tau_grid,
                               const RootSearchOptions& opts = {});

// Same as scan_tau, but failures are recorded per point instead of thrown.
[[nodiscard]] TauScan scan_tau_row(const LinearizedSystem& base, double k,
                                   std::span<const double> tau_grid,
                                   const RootSearchOptions& opts = {});

struct StabilitySurface {
    std::vector<double> k_grid;
    std::vector<double> tau_grid;
    std::vector<TauScan> rows; // one row per k

    [[nodiscard]] const ScanPoint& at(std::size_t ik, std::size_t itau) const {
        return rows.at(ik).points.at(itau);
    }
    // (row, column) of the smallest converged Re lambda1.
    [[nodiscard]] std::optional<std::pair<std::size_t, std::size_t>> argmin() const;
};

// Rows evaluated concurrently with OpenMP; output ordering is deterministic
// and bit-identical to scan_k_tau_serial.
[[nodiscard]] StabilitySurface scan_k_tau(const ModelParams& p, FixedPointKind kind,
                                          std::span<const double> k_grid,
                                          std::span<const double> tau_grid,
                                          const RootSearchOptions& opts = {});

// Serial reference for scan_k_tau.
[[nodiscard]] StabilitySurface scan_k_tau_serial(const ModelParams& p, FixedPointKind kind,
                                                 std::span<const double> k_grid,
                                                 std::span<const double> tau_grid,
                                                 const RootSearchOptions& opts = {});

} // namespace tdas
