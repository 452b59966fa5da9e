#include "tdas/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

#include "tdas/errors.hpp"
#include "tdas/parallel.hpp"
#include "tdas/quadrature.hpp"

namespace tdas {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

} // namespace

HPCoefficients hp_coefficients(const ModelParams& p, const MeanFieldState& fp) {
    const double jz = fp.jz;
    if (!(jz < 0.5)) throw DomainError("Holstein-Primakoff expansion needs jz < 1/2");
    const double g = p.g, U = p.U;
    const double up = 0.5 + jz;
    const double down = 0.5 - jz;
    const double root = std::sqrt(down);

    HPCoefficients c;
    c.omega_a = p.omega + U * jz;
    const double lorentz = c.omega_a * c.omega_a + p.kappa * p.kappa;
    c.omega_b = p.omega0 + 4.0 * g * g * c.omega_a / lorentz * up + U * fp.photon_number();
    c.lambda1_c = -2.0 * g * jz / root - 2.0 * g * U * c.omega_a / lorentz * up * root;
    c.lambda2_c = 2.0 * g * U * p.kappa / lorentz * up * root;
    c.chi = 4.0 * g * g * c.omega_a / lorentz * up * (1.5 - jz) / down;
    return c;
}

MeanFieldAmplitudes mean_field_amplitudes(const MeanFieldState& fp, double N) {
    if (!(N >= 1.0)) throw DomainError("atom number must be >= 1");
    MeanFieldAmplitudes m;
    m.N = N;
    const double sqrtN = std::sqrt(N);
    m.b0 = sqrtN * std::sqrt(std::max(0.5 + fp.jz, 0.0));
    // b0 > 0 pairs with jx >= 0; the other sign is the parity image.
    m.a0 = sqrtN * fp.alpha() * (fp.jx < 0.0 ? -1.0 : 1.0);
    return m;
}

double linear_term_coefficient(const ModelParams& p, const MeanFieldAmplitudes& m) {
    const cplx alpha = m.alpha();
    const double beta = m.beta();
    const double b2 = beta * beta;
    if (!(b2 < 1.0)) throw DomainError("b0^2 must stay below N");
    return 4.0 * p.g * alpha.real() * (0.5 - b2) / std::sqrt(1.0 - b2) + p.omega0 * beta +
           p.U * beta * std::norm(alpha);
}

double input_noise_spectrum(double nu, double kappa, double k, double tau) {
    if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
    return 1.0 + (k / kappa) * (1.0 - std::cos(nu * tau));
}

// ---------------------------------------------------------------------------
// SpectralFunctions

SpectralFunctions::SpectralFunctions(const HPCoefficients& c, double kappa, double k, double tau)
    : c_(c), kappa_(kappa), k_(k), tau_(tau) {
    if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
    if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
}

cplx SpectralFunctions::damping(cplx nu) const {
    return kappa_ - kI * nu - k_ * (std::exp(kI * nu * tau_) - 1.0);
}

cplx SpectralFunctions::N(cplx nu) const { return c_.omega_a + kI * damping(nu); }

cplx SpectralFunctions::D(cplx nu) const {
    const cplx c = damping(nu);
    const double P = c_.omega_b * (c_.omega_b + c_.chi);
    return (c_.omega_a * c_.omega_a + c * c) * (nu * nu - P) +
           4.0 * std::norm(c_.G()) * c_.omega_a * c_.omega_b;
}

cplx SpectralFunctions::D_derivative(cplx nu) const {
    const cplx c = damping(nu);
    const cplx dc = -kI - kI * k_ * tau_ * std::exp(kI * nu * tau_);
    const double P = c_.omega_b * (c_.omega_b + c_.chi);
    return 2.0 * c * dc * (nu * nu - P) + (c_.omega_a * c_.omega_a + c * c) * 2.0 * nu;
}

double SpectralFunctions::integrand_white(double nu) const {
    const double G2 = std::norm(c_.G());
    return 4.0 * c_.omega_b * c_.omega_b * G2 * G2 / std::norm(D(nu));
}

double SpectralFunctions::integrand(double nu) const { return integrand_white(nu) * S_in(nu); }

double SpectralFunctions::frequency_scale() const {
    return std::abs(c_.omega_a) + kappa_ + 2.0 * std::abs(k_) + std::abs(c_.omega_b) +
           std::abs(c_.chi) + std::abs(c_.G());
}

ModeTransfer closed_form_a(const SpectralFunctions& sf, double nu) {
    const HPCoefficients& c = sf.coefficients();
    const cplx pre = kI * std::sqrt(2.0 * sf.kappa()) / sf.D(nu);
    const double wb = c.omega_b;
    const cplx G = c.G();
    return {pre * (2.0 * wb * std::norm(G) + sf.N(nu) * (nu * nu - wb * (wb + c.chi))),
            pre * 2.0 * wb * G * G};
}

ModeTransfer closed_form_b(const SpectralFunctions& sf, double nu) {
    const HPCoefficients& c = sf.coefficients();
    const cplx pre = kI * std::sqrt(2.0 * sf.kappa()) * (nu + c.omega_b) / sf.D(nu);
    const cplx G = c.G();
    return {pre * std::conj(G) * sf.N(nu), -pre * G * std::conj(sf.N(-nu))};
}

// ---------------------------------------------------------------------------
// Generic Fourier-space inversion

Eigen::MatrixXcd fourier_generic(const Eigen::MatrixXcd& A, const Eigen::VectorXd& gamma,
                                 std::span<const DelayTerm> delays, double nu) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || gamma.size() != n) throw DomainError("fourier_generic: size mismatch");
    Eigen::MatrixXcd M = A;
    for (Eigen::Index i = 0; i < n; ++i) M(i, i) += kI * nu - gamma(i);
    for (const DelayTerm& d : delays) {
        if (d.K.rows() != n || d.K.cols() != n) throw DomainError("fourier_generic: size mismatch");
        M += d.K * std::exp(kI * nu * d.tau);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    if (!(lu.rcond() >= 1e-12)) throw SingularAtFrequency("transfer matrix is singular");
    Eigen::MatrixXcd coupling = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) coupling(i, i) = std::sqrt(2.0 * gamma(i));
    return lu.solve(coupling);
}

FourierSystem dicke_fourier_system(const HPCoefficients& c, double kappa, double k, double tau) {
    const cplx G = c.G();
    const double wa = c.omega_a, wb = c.omega_b, l1 = c.lambda1_c, l2 = c.lambda2_c;
    const double half_chi = 0.5 * c.chi;
    FourierSystem s;
    s.A = Eigen::MatrixXcd::Zero(4, 4);
    auto& A = s.A;
    A(0, 0) = -kI * wa - k;
    A(0, 2) = A(0, 3) = -kI * G;
    A(1, 1) = kI * wa - k;
    A(1, 2) = A(1, 3) = kI * std::conj(G);
    A(2, 0) = -kI * l1 + l2;
    A(2, 1) = -kI * l1 - l2;
    A(2, 2) = -kI * (wb + half_chi);
    A(2, 3) = -kI * half_chi;
    A(3, 0) = kI * l1 - l2;
    A(3, 1) = kI * l1 + l2;
    A(3, 2) = kI * half_chi;
    A(3, 3) = kI * (wb + half_chi);
    s.gamma = Eigen::Vector4d(kappa, kappa, 0.0, 0.0);
    if (k != 0.0) {
        Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(4, 4);
        K(0, 0) = K(1, 1) = k;
        s.delays.push_back({K, tau});
    }
    return s;
}

// ---------------------------------------------------------------------------
// Instability detection

namespace {

// Magnitude D would have without cancellations, for singularity tests.
double d_scale(const SpectralFunctions& sf, double nu) {
    const HPCoefficients& c = sf.coefficients();
    const double P = std::abs(c.omega_b * (c.omega_b + c.chi));
    return (c.omega_a * c.omega_a + std::norm(sf.damping(nu))) * (nu * nu + P) +
           4.0 * std::norm(c.G()) * std::abs(c.omega_a * c.omega_b);
}

constexpr double kSingularRatio = 1e-13;

// Uniform-plus-logarithmic grid on [0, V] fine enough to follow the delay
// oscillation and the cavity resonance.
std::vector<double> scan_grid(const SpectralFunctions& sf, double V, double per_period) {
    const double s = sf.frequency_scale();
    double h = s / 512.0;
    if (sf.tau() > 0.0 && sf.k() != 0.0) h = std::min(h, 2.0 * kPi / (per_period * sf.tau()));
    const auto n_lin = static_cast<std::size_t>(std::ceil(V / h));
    std::vector<double> grid;
    grid.reserve(n_lin + 2400);
    for (std::size_t i = 0; i <= n_lin; ++i) grid.push_back(V * static_cast<double>(i) / n_lin);
    // Log part resolves soft modes sitting at tiny frequencies.
    const double lo = 1e-10 * s, hi = std::min(s, V);
    constexpr int n_log = 2400;
    for (int i = 0; i < n_log; ++i) {
        grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n_log - 1)));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

struct PhaseWalk {
    double change{0.0};    // continuous change of arg D along the grid
    double jump_nu{0.0};   // location of the largest positive local phase increment
    double jump_size{0.0};
};

class PhaseTracker {
public:
    explicit PhaseTracker(const SpectralFunctions& sf) : sf_(sf) {}

    double step(double a, cplx Da, double b, cplx Db, int depth) {
        const double d = std::arg(Db / Da);
        if (std::abs(d) < kPi / 4.0) return d;
        const double m = 0.5 * (a + b);
        if (depth > 80 || !(m > a && m < b)) {
            throw DivergentFluctuations("D vanishes on the real frequency axis", m);
        }
        const cplx Dm = check(m);
        return step(a, Da, m, Dm, depth + 1) + step(m, Dm, b, Db, depth + 1);
    }

    cplx check(double nu) const {
        const cplx D = sf_.D(nu);
        if (!(std::abs(D) > kSingularRatio * d_scale(sf_, nu))) {
            throw DivergentFluctuations("D vanishes on the real frequency axis", nu);
        }
        return D;
    }

private:
    const SpectralFunctions& sf_;
};

} // namespace

int unstable_mode_count(const SpectralFunctions& sf) {
    const double s = sf.frequency_scale();
    double V = 16.0 * s;
    cplx rho = sf.D(V) / (-std::pow(V, 4));
    for (int i = 0; i < 8 && std::abs(rho - 1.0) > 0.25; ++i) {
        V *= 2.0;
        rho = sf.D(V) / (-std::pow(V, 4));
    }
    if (std::abs(rho - 1.0) > 0.25) throw SearchFailed("D(nu) never reaches its nu^4 asymptote");

    const std::vector<double> grid = scan_grid(sf, V, 8.0);
    PhaseTracker tracker(sf);
    PhaseWalk walk;
    cplx prev = tracker.check(grid.front());
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const cplx cur = tracker.check(grid[i]);
        const double d = tracker.step(grid[i - 1], prev, grid[i], cur, 0);
        walk.change += d;
        if (d > walk.jump_size) {
            walk.jump_size = d;
            walk.jump_nu = grid[i];
        }
        prev = cur;
    }
    const double turns = (2.0 * walk.change + 4.0 * kPi - 2.0 * std::arg(rho)) / (2.0 * kPi);
    const double n = std::round(turns);
    if (std::abs(turns - n) > 0.05) throw SearchFailed("argument principle count is not an integer");
    if (n > 0.0) {
        throw DivergentFluctuations("fixed point is linearly unstable: " +
                                        std::to_string(static_cast<int>(n)) +
                                        " fluctuation mode(s) grow",
                                    walk.jump_nu);
    }
    return static_cast<int>(n);
}

std::vector<cplx> near_axis_zeros(const SpectralFunctions& sf, double nu_max, double band) {
    const double s = sf.frequency_scale();
    const std::vector<double> grid = scan_grid(sf, nu_max, 16.0);
    std::vector<double> mag(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) mag[i] = std::abs(sf.D(grid[i]));

    std::vector<cplx> seeds;
    // Undamped k = 0 estimate of the soft mode.
    const HPCoefficients& c = sf.coefficients();
    const double soft2 = c.omega_b * (c.omega_b + c.chi) -
                         4.0 * std::norm(c.G()) * c.omega_a * c.omega_b /
                             (c.omega_a * c.omega_a + sf.kappa() * sf.kappa());
    if (soft2 > 0.0) seeds.emplace_back(std::sqrt(soft2), 0.0);
    constexpr std::size_t w = 8;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool left_ok = i == 0 || mag[i] <= mag[i - 1];
        const bool right_ok = i + 1 == grid.size() || mag[i] < mag[i + 1];
        if (!left_ok || !right_ok) continue;
        const double left = mag[i >= w ? i - w : 0];
        const double right = mag[std::min(i + w, grid.size() - 1)];
        if (mag[i] < 0.5 * std::max(left, right)) seeds.emplace_back(grid[i], 0.0);
    }

    std::vector<cplx> zeros;
    for (cplx z : seeds) {
        bool ok = false;
        for (int it = 0; it < 40; ++it) {
            const cplx step = sf.D(z) / sf.D_derivative(z);
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            z -= step;
            if (std::abs(step) <= 1e-14 * std::max(std::abs(z), 1e-12 * s)) {
                ok = true;
                break;
            }
        }
        if (!ok || std::abs(z.imag()) > band || z.real() < -band || z.real() > nu_max + band) {
            continue;
        }
        const double tol = 1e-9 * std::max(std::abs(z), 1e-9 * s);
        const bool dup = std::any_of(zeros.begin(), zeros.end(),
                                     [&](cplx q) { return std::abs(q - z) <= tol; });
        if (!dup) zeros.push_back(z);
    }
    std::sort(zeros.begin(), zeros.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    return zeros;
}

// ---------------------------------------------------------------------------
// Steady-state integral

FluctuationResult steady_state_photon_fluct(const SpectralFunctions& sf,
                                            const FluctuationOptions& opts) {
    FluctuationResult out;
    const HPCoefficients& c = sf.coefficients();
    // integrand vanishes identically
    if (std::norm(c.G()) == 0.0 || c.omega_b == 0.0) return out;
    (void)unstable_mode_count(sf);

    const double s = sf.frequency_scale();
    const double tau = sf.tau();
    const bool oscillating = tau > 0.0 && sf.k() != 0.0;
    const double max_width = oscillating ? kPi / tau : 0.0;
    const double band = oscillating ? kPi / tau : 0.05 * s;
    auto f = [&](double nu) { return opts.white_noise ? sf.integrand_white(nu) : sf.integrand(nu); };
    const double s_max = opts.white_noise ? 1.0 : 1.0 + 2.0 * std::abs(sf.k()) / sf.kappa();
    auto tail_bound = [&](double V) {
        const double G2 = std::norm(c.G());
        return 4.0 * c.omega_b * c.omega_b * G2 * G2 * s_max / std::norm(sf.D(V)) * V / 7.0;
    };

    double V = std::max(8.0 * s, opts.min_nu_max);
    std::vector<double> bps;
    for (cplx z : near_axis_zeros(sf, V, band)) {
        const double x = z.real();
        const double gamma = std::max(std::abs(z.imag()), 1e-15 * s);
        bps.push_back(x);
        for (double d = 0.25 * gamma; d < band; d *= 2.0) {
            bps.push_back(x - d);
            bps.push_back(x + d);
        }
        bps.push_back(x - band);
        bps.push_back(x + band);
    }
    for (double x = s; x > 1e-12 * s; x *= 0.25) bps.push_back(x);
    for (double x = s; x < V; x *= 2.0) bps.push_back(x);

    QuadratureOptions qo;
    qo.rel_tol = opts.rel_tol;
    qo.max_panel_width = max_width;
    QuadratureResult q = integrate_panels(f, make_panels(0.0, V, bps, max_width), qo);
    double lo = V;
    for (int i = 0; i < 20 && tail_bound(V) > opts.tail_tol * q.value; ++i) {
        V *= 2.0;
        const QuadratureResult ext = integrate_panels(f, make_panels(lo, V, {}, max_width), qo);
        q.value += ext.value;
        q.error_estimate += ext.error_estimate;
        q.panels += ext.panels;
        lo = V;
    }
    const double prefactor = 2.0 * sf.kappa() / kPi; // (kappa / pi) and the even extension
    out.value = prefactor * q.value;
    out.error_estimate = prefactor * (q.error_estimate + tail_bound(V));
    out.nu_max = V;
    out.panels = q.panels;
    return out;
}

FluctuationResult steady_state_photon_fluct(const ModelParams& p, const MeanFieldState& fp,
                                            double k, double tau,
                                            const FluctuationOptions& opts) {
    return steady_state_photon_fluct(SpectralFunctions(hp_coefficients(p, fp), p.kappa, k, tau),
                                     opts);
}

// ---------------------------------------------------------------------------
// Sweeps and the exponent fit

std::string_view to_string(CriticalSide side) {
    return side == CriticalSide::Below ? "below" : "above";
}

CriticalSide critical_side_from_string(std::string_view name) {
    if (name == "below") return CriticalSide::Below;
    if (name == "above") return CriticalSide::Above;
    throw DomainError("unknown side '" + std::string(name) + "' (expected below or above)");
}

namespace {

FixedPointKind side_phase(CriticalSide side) {
    return side == CriticalSide::Below ? FixedPointKind::Normal : FixedPointKind::SuperRadiantPlus;
}

struct PointOutcome {
    SweepPoint point;
    std::exception_ptr failure;
};

PointOutcome evaluate_point(const ModelParams& p, double gc, CriticalSide side, double k, double tau,
                            double ratio, const FluctuationOptions& opts) {
    PointOutcome o;
    o.point.g_over_gc = ratio;
    o.point.phase = side_phase(side);
    o.point.k = k;
    o.point.tau = tau;
    try {
        const ModelParams q = p.with_coupling(ratio * gc);
        o.point.fluct = steady_state_photon_fluct(q, fixed_point(o.point.phase, q), k, tau, opts).value;
        o.point.converged = true;
    } catch (const Error& e) {
        o.point.error = std::string(e.kind()) + ": " + e.what();
        o.failure = std::current_exception();
    }
    return o;
}

std::vector<PointOutcome> run_sweep(const ModelParams& p, CriticalSide side, double k, double tau,
                                    std::span<const double> ratios, const FluctuationOptions& opts,
                                    bool parallel) {
    const double gc = critical_coupling(p);
    std::vector<PointOutcome> out(ratios.size());
    const auto n = static_cast<long>(ratios.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
        for (long i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(i);
            out[j] = evaluate_point(p, gc, side, k, tau, ratios[j], opts);
        }
    } else {
        for (std::size_t j = 0; j < ratios.size(); ++j) {
            out[j] = evaluate_point(p, gc, side, k, tau, ratios[j], opts);
        }
    }
    return out;
}

std::vector<SweepPoint> points_of(std::vector<PointOutcome>&& outcomes) {
    std::vector<SweepPoint> pts;
    pts.reserve(outcomes.size());
    for (auto& o : outcomes) pts.push_back(std::move(o.point));
    return pts;
}

} // namespace

std::vector<SweepPoint> sweep_fluctuations(const ModelParams& p, CriticalSide side, double k,
                                           double tau, std::span<const double> g_over_gc,
                                           const FluctuationOptions& opts) {
    return points_of(run_sweep(p, side, k, tau, g_over_gc, opts, true));
}

std::vector<SweepPoint> sweep_fluctuations_serial(const ModelParams& p, CriticalSide side, double k,
                                                  double tau, std::span<const double> g_over_gc,
                                                  const FluctuationOptions& opts) {
    return points_of(run_sweep(p, side, k, tau, g_over_gc, opts, false));
}

ExponentFit fit_flux_exponent(std::span<const double> g_over_gc, std::span<const double> fluct) {
    if (g_over_gc.size() != fluct.size()) throw DomainError("fit inputs differ in length");
    if (g_over_gc.size() < 3) throw DomainError("exponent fit needs at least 3 points");
    const std::size_t n = g_over_gc.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = g_over_gc[i];
        if (!(r > 0.0) || r == 1.0 || !(fluct[i] > 0.0)) {
            throw DomainError("exponent fit needs g/g_c != 1 and positive fluctuations");
        }
        x[i] = std::log(std::abs(1.0 - r));
        y[i] = std::log(std::sqrt(fluct[i]) / r);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("exponent fit needs distinct |1 - g/g_c|");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - intercept - slope * x[i];
        ssr += r * r;
    }
    ExponentFit fit;
    fit.exponent = -2.0 * slope;
    fit.standard_error = 2.0 * std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    fit.intercept = intercept;
    fit.points = n;
    return fit;
}

std::vector<double> exponent_grid(CriticalSide side, double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw DomainError("exponent grid needs 0 < lo < hi, n >= 2");
    std::vector<double> out(n);
    const double sign = side == CriticalSide::Below ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
        out[i] = 1.0 + sign * e;
    }
    return out;
}

ExponentFit photon_flux_exponent(const ModelParams& p, double k, double tau, CriticalSide side,
                                 std::span<const double> g_over_gc,
                                 const FluctuationOptions& opts) {
    for (double r : g_over_gc) {
        const bool inside = side == CriticalSide::Below ? (r > 0.5 && r < 1.0) : (r > 1.0 && r < 1.5);
        if (!inside) throw DomainError("g/g_c outside the fit range of the requested side");
    }
    std::vector<PointOutcome> outcomes = run_sweep(p, side, k, tau, g_over_gc, opts, true);
    std::vector<double> values;
    values.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (o.failure) std::rethrow_exception(o.failure);
        values.push_back(o.point.fluct);
    }
    return fit_flux_exponent(g_over_gc, values);
}

} // namespace tdas
