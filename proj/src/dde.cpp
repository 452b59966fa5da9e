#include "tdas/dde.hpp"

#include <algorithm>
#include <cmath>

#include "tdas/errors.hpp"

namespace tdas {

double RampSchedule::coupling(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= t0) return g_final;
    return std::sqrt(t / t0) * g_final;
}

MeanFieldState InitialCondition::state() const {
    if (const auto* x = std::get_if<MeanFieldState>(&mode)) return *x;
    const double N = std::get<NearNormal>(mode).N;
    if (!(N > 8.0)) throw DomainError("near-normal initial state needs N > 8");
    const double a = 1.0 / std::sqrt(N);
    return {0.0, 0.0, a, a, -std::sqrt(0.25 - 2.0 / N)};
}

InitialCondition InitialCondition::bloch_diagonal() {
    const double a = 1.0 / std::sqrt(12.0);
    return explicit_state({0.0, 0.0, a, a, a});
}

// ---------------------------------------------------------------------------
// DenseHistory

DenseHistory::DenseHistory(double step, std::size_t capacity, const MeanFieldState& initial)
    : step_(step), ring_(std::max<std::size_t>(capacity, 2)), initial_(initial) {}

void DenseHistory::push(const MeanFieldState& x, const MeanFieldState& dxdt) {
    ring_[count_ % ring_.size()] = Node{x, dxdt};
    ++count_;
}

const DenseHistory::Node& DenseHistory::node(std::size_t step_index) const {
    return ring_[step_index % ring_.size()];
}

double DenseHistory::window_start() const {
    const std::size_t first = count_ > ring_.size() ? count_ - ring_.size() : 0;
    return static_cast<double>(first) * step_;
}

double DenseHistory::window_end() const {
    return count_ == 0 ? 0.0 : static_cast<double>(count_ - 1) * step_;
}

void DenseHistory::locate(double t, std::size_t& left, double& theta) const {
    const std::size_t first = count_ > ring_.size() ? count_ - ring_.size() : 0;
    const double s = t / step_;
    double fl = std::floor(s);
    auto idx = static_cast<long long>(fl);
    const auto lo = static_cast<long long>(first);
    const auto hi = static_cast<long long>(count_) - 2;
    idx = std::clamp(idx, lo, std::max(lo, hi));
    left = static_cast<std::size_t>(idx);
    theta = s - static_cast<double>(idx);
}

namespace {

struct HermiteWeights {
    double h00, h10, h01, h11;
};

inline HermiteWeights hermite(double theta, double step) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    return {2.0 * t3 - 3.0 * t2 + 1.0, (t3 - 2.0 * t2 + theta) * step, -2.0 * t3 + 3.0 * t2,
            (t3 - t2) * step};
}

} // namespace

MeanFieldState DenseHistory::evaluate(double t) const {
    if (t <= 0.0 || count_ == 0) return initial_;
    if (count_ == 1) return node(0).x;
    std::size_t left = 0;
    double theta = 0.0;
    locate(t, left, theta);
    const Node& a = node(left);
    const Node& b = node(left + 1);
    const HermiteWeights w = hermite(theta, step_);
    auto mix = [&](double xa, double da, double xb, double db) {
        return w.h00 * xa + w.h10 * da + w.h01 * xb + w.h11 * db;
    };
    return {mix(a.x.x1, a.dx.x1, b.x.x1, b.dx.x1), mix(a.x.x2, a.dx.x2, b.x.x2, b.dx.x2),
            mix(a.x.jx, a.dx.jx, b.x.jx, b.dx.jx), mix(a.x.jy, a.dx.jy, b.x.jy, b.dx.jy),
            mix(a.x.jz, a.dx.jz, b.x.jz, b.dx.jz)};
}

void DenseHistory::evaluate_field(double t, double& x1, double& x2) const {
    if (t <= 0.0 || count_ < 2) {
        const MeanFieldState& x = count_ == 1 && t > 0.0 ? node(0).x : initial_;
        x1 = x.x1;
        x2 = x.x2;
        return;
    }
    std::size_t left = 0;
    double theta = 0.0;
    locate(t, left, theta);
    const Node& a = node(left);
    const Node& b = node(left + 1);
    const HermiteWeights w = hermite(theta, step_);
    x1 = w.h00 * a.x.x1 + w.h10 * a.dx.x1 + w.h01 * b.x.x1 + w.h11 * b.dx.x1;
    x2 = w.h00 * a.x.x2 + w.h10 * a.dx.x2 + w.h01 * b.x.x2 + w.h11 * b.dx.x2;
}

// ---------------------------------------------------------------------------
// Integrator

double default_step(const ModelParams& p, double tau) {
    const double fast = 2.0 * std::numbers::pi / (50.0 * std::max(std::abs(p.omega), p.kappa));
    return tau > 0.0 ? std::min(tau / 20.0, fast) : fast;
}

namespace {

template <class Coupling>
Trajectory run_method_of_steps(const ModelParams& p, const FeedbackParams& f,
                               const InitialCondition& ic, double t_end, double h,
                               const IntegrateOptions& opts, Coupling&& coupling) {
    p.validate();
    f.validate();
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("integration step must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be positive");
    const double tau = f.tau;
    if (tau > 0.0 && h > tau) throw StepTooLarge(h, tau);

    const double k = feedback_gain(f);
    const bool delayed = k != 0.0 && tau > 0.0;
    const std::size_t stride = std::max<std::size_t>(opts.stride, 1);
    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));

    const MeanFieldState x0 = ic.state();
    const auto capacity = static_cast<std::size_t>(std::ceil(tau / h)) + 3;

    Trajectory traj;
    traj.step = h;
    traj.stride = stride;
    traj.history = DenseHistory(h, capacity, x0);
    const std::size_t n_samples = n_steps / stride + 2;
    traj.times.reserve(n_samples);
    traj.states.reserve(n_samples);
    traj.couplings.reserve(n_samples);

    ModelParams q = p;
    // Full right-hand side at time s, including the feedback force.
    auto rhs = [&](double s, const MeanFieldState& y) {
        q.g = coupling(s);
        MeanFieldState d = mean_field_rhs(y, q);
        if (delayed) {
            double d1 = 0.0, d2 = 0.0;
            traj.history.evaluate_field(s - tau, d1, d2);
            d.x1 += k * (d1 - y.x1);
            d.x2 += k * (d2 - y.x2);
        }
        return d;
    };
    auto axpy = [](const MeanFieldState& x, double a, const MeanFieldState& d) {
        return MeanFieldState{x.x1 + a * d.x1, x.x2 + a * d.x2, x.jx + a * d.jx, x.jy + a * d.jy,
                              x.jz + a * d.jz};
    };

    MeanFieldState x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    traj.couplings.push_back(coupling(0.0));
    traj.history.push(x, rhs(0.0, x));

    const double half = 0.5 * h;
    const double sixth = h / 6.0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * h;
        const MeanFieldState k1 = rhs(t, x);
        const MeanFieldState k2 = rhs(t + half, axpy(x, half, k1));
        const MeanFieldState k3 = rhs(t + half, axpy(x, half, k2));
        const MeanFieldState k4 = rhs(t + h, axpy(x, h, k3));
        x = MeanFieldState{
            x.x1 + sixth * (k1.x1 + 2.0 * (k2.x1 + k3.x1) + k4.x1),
            x.x2 + sixth * (k1.x2 + 2.0 * (k2.x2 + k3.x2) + k4.x2),
            x.jx + sixth * (k1.jx + 2.0 * (k2.jx + k3.jx) + k4.jx),
            x.jy + sixth * (k1.jy + 2.0 * (k2.jy + k3.jy) + k4.jy),
            x.jz + sixth * (k1.jz + 2.0 * (k2.jz + k3.jz) + k4.jz),
        };
        const double t_next = static_cast<double>(i + 1) * h;
        if (!std::isfinite(x.x1 + x.x2 + x.jx + x.jy + x.jz)) throw NonFiniteState(t_next);
        if (delayed) {
            traj.history.push(x, rhs(t_next, x));
        } else {
            q.g = coupling(t_next);
            traj.history.push(x, mean_field_rhs(x, q));
        }

        if ((i + 1) % stride == 0 || i + 1 == n_steps) {
            traj.times.push_back(t_next);
            traj.states.push_back(x);
            traj.couplings.push_back(coupling(t_next));
        }
    }
    return traj;
}

} // namespace

Trajectory integrate(const ModelParams& p, const FeedbackParams& f, const InitialCondition& ic,
                     double t_end, double h, const IntegrateOptions& opts) {
    const double g = p.g;
    return run_method_of_steps(p, f, ic, t_end, h, opts, [g](double) { return g; });
}

Trajectory integrate_ramp(const ModelParams& p, const FeedbackParams& f, const RampSchedule& ramp,
                          const InitialCondition& ic, double t_end, double h,
                          const IntegrateOptions& opts) {
    if (!std::isfinite(ramp.g_final) || !(ramp.t0 > 0.0)) {
        throw DomainError("ramp needs t0 > 0 and a finite final coupling");
    }
    return run_method_of_steps(p, f, ic, t_end, h, opts,
                               [&ramp](double t) { return ramp.coupling(t); });
}

// ---------------------------------------------------------------------------
// Post-processing

std::vector<double> lowpass(std::span<const double> series, double dt, double cutoff) {
    std::vector<double> out(series.begin(), series.end());
    if (out.empty()) return out;
    if (!(cutoff > 0.0) || !(dt > 0.0)) throw DomainError("lowpass needs dt > 0 and cutoff > 0");
    const double a = -std::expm1(-cutoff * dt);
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = out[i - 1] + a * (out[i] - out[i - 1]);
    for (std::size_t i = out.size() - 1; i-- > 0;) out[i] = out[i + 1] + a * (out[i] - out[i + 1]);
    return out;
}

std::optional<double> relaxation_time(const Trajectory& traj, const MeanFieldState& target,
                                      double eps) {
    if (!(eps > 0.0)) throw DomainError("relaxation radius must be positive");
    const std::size_t n = traj.size();
    if (n == 0) return std::nullopt;
    std::size_t i = n;
    while (i > 0 && distance(traj.states[i - 1], target) < eps) --i;
    if (i == n) return std::nullopt;
    return traj.times[i];
}

double max_spin_norm_defect(const Trajectory& traj) {
    double worst = 0.0;
    for (const auto& x : traj.states) worst = std::max(worst, x.spin_norm_defect());
    return worst;
}

std::vector<double> jz_series(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& x : traj.states) out.push_back(x.jz);
    return out;
}

std::vector<double> photon_number_series(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& x : traj.states) out.push_back(x.photon_number());
    return out;
}

} // namespace tdas
