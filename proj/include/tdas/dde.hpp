// dde.hpp: delayed mean-field integration and trajectory post-processing
//
// The feedback term k (x(t - tau) - x(t)) acts on the field quadratures x1,
// x2 only. Integration uses the method of steps with classical RK4; delayed
// values come from cubic Hermite interpolation of the stored steps. History
// before t = 0 is the initial state held constant.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "tdas/model.hpp"

namespace tdas {

// g(t) = sqrt(t / t0) g_final for t <= t0, g_final afterwards.
struct RampSchedule {
    double t0{1.0};      // [us]
    double g_final{0.0}; // [rad/us]

    [[nodiscard]] double coupling(double t) const;
};

struct NearNormal {
    double N{1e5};
};

struct InitialCondition {
    std::variant<MeanFieldState, NearNormal> mode;

    // (0, 0, 1/sqrt(N), 1/sqrt(N), -sqrt(1/4 - 2/N)) for NearNormal.
    [[nodiscard]] MeanFieldState state() const;

    static InitialCondition explicit_state(const MeanFieldState& x) { return {x}; }
    static InitialCondition near_normal(double N) { return {NearNormal{N}}; }
    // (0, 0, 1/sqrt(12), 1/sqrt(12), 1/sqrt(12)), far from every fixed point.
    static InitialCondition bloch_diagonal();
};

// Cubic Hermite interpolant over the most recent uniform steps, kept in a
// ring buffer. Queries at t <= 0 return the constant initial history.
class DenseHistory {
public:
    DenseHistory() = default;
    DenseHistory(double step, std::size_t capacity, const MeanFieldState& initial);

    void push(const MeanFieldState& x, const MeanFieldState& dxdt);

    // Valid for t <= 0 or window_start() <= t <= window_end().
    [[nodiscard]] MeanFieldState evaluate(double t) const;
    // Faster path for the feedback term: interpolates (x1, x2) only.
    void evaluate_field(double t, double& x1, double& x2) const;

    [[nodiscard]] double window_start() const;
    [[nodiscard]] double window_end() const;
    [[nodiscard]] double step() const { return step_; }
    [[nodiscard]] std::size_t size() const { return count_; }

private:
    struct Node {
        MeanFieldState x;
        MeanFieldState dx;
    };
    [[nodiscard]] const Node& node(std::size_t step_index) const;
    // Locates the interval containing t; returns its left step index and the
    // local coordinate in [0, 1].
    void locate(double t, std::size_t& left, double& theta) const;

    double step_{0.0};
    std::vector<Node> ring_;
    std::size_t count_{0}; // total nodes pushed; node i sits at t = i * step
    MeanFieldState initial_{};
};

struct Trajectory {
    std::vector<double> times;            // [us], uniform stride * step
    std::vector<MeanFieldState> states;
    std::vector<double> couplings;        // g at each sample [rad/us]
    double step{0.0};                     // integrator step h [us]
    std::size_t stride{1};                // samples are every `stride` steps
    DenseHistory history;                 // last window of length >= tau

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] const MeanFieldState& final_state() const { return states.back(); }
    [[nodiscard]] double sample_spacing() const { return step * static_cast<double>(stride); }
};

struct IntegrateOptions {
    // Output decimation: one stored sample every `stride` steps. The final
    // step is always stored.
    std::size_t stride{1};
};

// Default step h = min(tau / 20, 2 pi / (50 |omega|)).
[[nodiscard]] double default_step(const ModelParams& p, double tau);

// Throws StepTooLarge if tau > 0 and h > tau, NonFiniteState on divergence,
// DomainError for nonpositive h or t_end.
[[nodiscard]] Trajectory integrate(const ModelParams& p, const FeedbackParams& f,
                                   const InitialCondition& ic, double t_end, double h,
                                   const IntegrateOptions& opts = {});

// Same stepping with g replaced by ramp.coupling(t) at every RK stage.
[[nodiscard]] Trajectory integrate_ramp(const ModelParams& p, const FeedbackParams& f,
                                        const RampSchedule& ramp, const InitialCondition& ic,
                                        double t_end, double h, const IntegrateOptions& opts = {});

// Zero-phase first-order low-pass: one exponential smoothing pass forward,
// one backward. `dt` is the sample spacing [us], `cutoff` in rad/us.
[[nodiscard]] std::vector<double> lowpass(std::span<const double> series, double dt,
                                          double cutoff);

inline constexpr double kDefaultRelaxationEps = 1e-3;

// Smallest sampled t* with |x(t) - target| < eps for every sample t >= t*.
// std::nullopt when the final sample is still outside the ball.
[[nodiscard]] std::optional<double> relaxation_time(const Trajectory& traj,
                                                    const MeanFieldState& target,
                                                    double eps = kDefaultRelaxationEps);

[[nodiscard]] double max_spin_norm_defect(const Trajectory& traj);

// Column extraction helpers for post-processing.
[[nodiscard]] std::vector<double> jz_series(const Trajectory& traj);
[[nodiscard]] std::vector<double> photon_number_series(const Trajectory& traj);

} // namespace tdas
