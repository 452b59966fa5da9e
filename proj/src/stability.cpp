#include "tdas/stability.hpp"

#include <algorithm>
#include <cmath>

#include "tdas/errors.hpp"
#include "tdas/parallel.hpp"

namespace tdas {

namespace {

constexpr double kDegenerateJz = 1e-9;
constexpr double kFixedPointResidual = 1e-9;
// Newton leaves the region where e^{-lambda tau} stays representable.
constexpr double kNewtonEscapeFactor = 50.0;

} // namespace

LinearizedSystem linearize(const ModelParams& p, const MeanFieldState& fp, double k, double tau) {
    if (std::abs(fp.jz) <= kDegenerateJz) {
        throw DegenerateFixedPoint("linearization eliminates j_z and needs |jz| > 1e-9");
    }
    if (max_abs(mean_field_rhs(fp, p)) > kFixedPointResidual) {
        throw NotAFixedPoint("state passed to linearize is not a fixed point");
    }
    const double x1 = fp.x1, x2 = fp.x2, jx = fp.jx, jy = fp.jy, jz = fp.jz;
    const double U = p.U, g = p.g;
    const double wt = p.omega + U * jz;
    const double w0t = p.omega0 + U * fp.photon_number();

    LinearizedSystem sys;
    sys.k = k;
    sys.tau = tau;
    sys.omega_tilde = wt;
    sys.omega0_tilde = w0t;
    sys.fixed_point = fp;
    sys.params = p;
    auto& A = sys.a_prime;
    A << -p.kappa, wt, -U * x2 * jx / jz, -U * x2 * jy / jz,
         -wt, -p.kappa, -2.0 * g + U * x1 * jx / jz, U * x1 * jy / jz,
         -2.0 * U * x1 * jy, -2.0 * U * x2 * jy, 0.0, -w0t,
         2.0 * U * x1 * jx - 4.0 * g * jz, 2.0 * U * x2 * jx, w0t + 4.0 * g * x1 * jx / jz,
         4.0 * g * x1 * jy / jz;
    return sys;
}

Eigen::Matrix4cd char_matrix(const LinearizedSystem& sys, cplx lambda) {
    Eigen::Matrix4cd m = -sys.a_prime.cast<cplx>();
    const cplx feedback = sys.tau > 0.0 ? sys.k * (std::exp(-lambda * sys.tau) - 1.0) : cplx{};
    for (int i = 0; i < 4; ++i) m(i, i) += lambda;
    m(0, 0) -= feedback;
    m(1, 1) -= feedback;
    return m;
}

cplx char_det(const LinearizedSystem& sys, cplx lambda) {
    return char_matrix(sys, lambda).determinant();
}

cplx char_det_derivative(const LinearizedSystem& sys, cplx lambda) {
    const Eigen::Matrix4cd m = char_matrix(sys, lambda);
    const cplx boost = sys.tau > 0.0 ? sys.k * sys.tau * std::exp(-lambda * sys.tau) : cplx{};
    const cplx diag[4] = {1.0 + boost, 1.0 + boost, 1.0, 1.0};
    cplx sum{};
    for (int j = 0; j < 4; ++j) {
        Eigen::Matrix3cd minor;
        for (int r = 0, rr = 0; r < 4; ++r) {
            if (r == j) continue;
            for (int c = 0, cc = 0; c < 4; ++c) {
                if (c == j) continue;
                minor(rr, cc++) = m(r, c);
            }
            ++rr;
        }
        sum += diag[j] * minor.determinant();
    }
    return sum;
}

double char_det_scale(const LinearizedSystem& sys, cplx lambda) {
    const Eigen::Matrix4cd m = char_matrix(sys, lambda);
    double scale = 1.0;
    for (int i = 0; i < 4; ++i) scale *= m.row(i).norm();
    return scale;
}

std::optional<CharRoot> refine_root(const LinearizedSystem& sys, cplx start,
                                    const RootSearchOptions& opts) {
    const double kappa = sys.params.kappa;
    cplx lambda = start;
    for (int it = 0; it < opts.max_newton_iterations; ++it) {
        const cplx d = char_det(sys, lambda);
        const cplx dd = char_det_derivative(sys, lambda);
        if (d == cplx{}) break;
        if (dd == cplx{} || !std::isfinite(std::abs(dd))) return std::nullopt;
        const cplx step = d / dd;
        lambda -= step;
        if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()) ||
            lambda.real() < -kNewtonEscapeFactor * kappa) {
            return std::nullopt;
        }
        if (std::abs(step) <= 1e-15 * std::max(std::abs(lambda), 1e-6 * kappa)) break;
    }
    CharRoot root;
    root.lambda = lambda.imag() < 0.0 ? std::conj(lambda) : lambda;
    root.residual = std::abs(char_det(sys, root.lambda));
    root.relative_residual = root.residual / char_det_scale(sys, root.lambda);
    if (!(root.relative_residual < opts.accept_relative_residual)) return std::nullopt;
    // A near-vanishing derivative at the root hints at a repeated root.
    const double slope = std::abs(char_det_derivative(sys, root.lambda)) * kappa /
                         char_det_scale(sys, root.lambda);
    root.multiplicity_hint = slope < 1e-6 ? 2 : 1;
    return root;
}

std::vector<CharRoot> characteristic_roots(const LinearizedSystem& sys,
                                           const RootSearchOptions& opts) {
    const double kappa = sys.params.kappa;
    const double re_lim = opts.window_re_factor * kappa;
    const double im_lim = opts.window_im_factor * (std::abs(sys.omega_tilde) + kappa);
    auto in_window = [&](cplx z) {
        return std::abs(z.real()) <= re_lim && std::abs(z.imag()) <= im_lim;
    };

    const Eigen::VectorXcd eig = collocation_eigenvalues(sys, opts.collocation_degree);
    std::vector<cplx> candidates;
    candidates.reserve(static_cast<std::size_t>(eig.size()) + 1);
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        const cplx z = eig(i);
        if (z.imag() < 0.0) continue; // conjugate pairs: keep Im >= 0
        if (in_window(z)) candidates.push_back(z);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](cplx a, cplx b) { return a.real() > b.real(); });
    if (candidates.size() > static_cast<std::size_t>(opts.max_candidates)) {
        candidates.resize(static_cast<std::size_t>(opts.max_candidates));
    }
    if (opts.seed) candidates.insert(candidates.begin(), *opts.seed);

    std::vector<CharRoot> roots;
    const double dedup = opts.dedup_factor * kappa;
    for (const cplx& c : candidates) {
        auto r = refine_root(sys, c, opts);
        if (!r || !in_window(r->lambda)) continue;
        const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const CharRoot& q) {
            return std::abs(q.lambda - r->lambda) <= dedup;
        });
        if (!duplicate) roots.push_back(*r);
    }
    if (roots.empty()) {
        std::string msg = "no characteristic root converged; candidates:";
        for (const cplx& c : candidates) {
            msg += " (" + std::to_string(c.real()) + "," + std::to_string(c.imag()) + ")";
        }
        throw SearchFailed(msg);
    }
    std::sort(roots.begin(), roots.end(), [](const CharRoot& a, const CharRoot& b) {
        return a.lambda.real() > b.lambda.real();
    });
    return roots;
}

CharRoot rightmost_root(const LinearizedSystem& sys, const RootSearchOptions& opts) {
    return characteristic_roots(sys, opts).front();
}

ApproxRoot approx_rightmost(const LinearizedSystem& sys) {
    const MeanFieldState& x = sys.fixed_point;
    if (x.jy != 0.0) throw DomainError("small-delay approximation needs jy = 0");
    const ModelParams& p = sys.params;
    const double wt = sys.omega_tilde;
    const double w0t = sys.omega0_tilde;
    const double lorentz = p.kappa * p.kappa + wt * wt;
    const double coupling = std::norm(2.0 * p.g * x.jz - p.U * x.alpha() * x.jx);
    const double drive = 2.0 * wt * w0t * coupling / x.jz;

    const double t1 = w0t * w0t;
    const double t2 = 4.0 * p.g * w0t * x.x1 * x.jx / x.jz;
    const double t3 = drive / lorentz;
    const double radicand = t1 + t2 + t3;
    const double tol = 1e-12 * (std::abs(t1) + std::abs(t2) + std::abs(t3));
    if (radicand < -tol) throw DomainError("lambda^(0) radicand is negative");

    ApproxRoot out;
    out.leading = cplx(0.0, std::sqrt(std::max(radicand, 0.0)));
    const double feedback = sys.tau > 0.0 ? sys.k * sys.tau : 0.0;
    out.correction = p.kappa * (1.0 + feedback) * drive / (lorentz * lorentz);
    out.residual = std::abs(char_det(sys, out.lambda()));
    return out;
}

// ---------------------------------------------------------------------------
// Scans

namespace {

void mark_extrema(TauScan& scan) {
    const auto& pts = scan.points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!pts[i].converged) continue;
        if (!scan.argmin || pts[i].root.lambda.real() < pts[*scan.argmin].root.lambda.real()) {
            scan.argmin = i;
        }
    }
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        if (!pts[i - 1].converged || !pts[i].converged || !pts[i + 1].converged) continue;
        const double re = pts[i].root.lambda.real();
        if (re < pts[i - 1].root.lambda.real() && re <= pts[i + 1].root.lambda.real()) {
            scan.first_local_min = i;
            break;
        }
    }
}

// A jump in the oscillation frequency signals that another root branch has
// become the rightmost one.
bool is_branch_jump(const CharRoot& prev, const CharRoot& cur) {
    const double im_scale = std::max(std::abs(prev.lambda.imag()), std::abs(cur.lambda.imag()));
    return std::abs(cur.lambda.imag() - prev.lambda.imag()) > 0.05 * im_scale + 1e-12;
}

} // namespace

TauScan scan_tau_row(const LinearizedSystem& base, double k, std::span<const double> tau_grid,
                     const RootSearchOptions& opts) {
    TauScan scan;
    scan.points.reserve(tau_grid.size());
    std::optional<cplx> previous;
    for (double tau : tau_grid) {
        ScanPoint pt;
        pt.k = k;
        pt.tau = tau;
        RootSearchOptions o = opts;
        o.seed = previous;
        try {
            pt.root = rightmost_root(base.with_feedback(k, tau), o);
            pt.converged = true;
        } catch (const Error& e) {
            // Cold restart without the warm-start seed before giving up.
            try {
                o.seed.reset();
                pt.root = rightmost_root(base.with_feedback(k, tau), o);
                pt.converged = true;
            } catch (const Error& e2) {
                pt.error = e2.what();
            }
        }
        if (pt.converged) {
            if (previous && !scan.points.empty() && scan.points.back().converged) {
                pt.branch_jump = is_branch_jump(scan.points.back().root, pt.root);
            }
            previous = pt.root.lambda;
        }
        scan.points.push_back(std::move(pt));
    }
    mark_extrema(scan);
    return scan;
}

TauScan scan_tau(const ModelParams& p, FixedPointKind kind, double k,
                 std::span<const double> tau_grid, const RootSearchOptions& opts) {
    if (tau_grid.empty()) throw DomainError("tau grid is empty");
    if (!std::is_sorted(tau_grid.begin(), tau_grid.end())) throw DomainError("tau grid not sorted");
    const LinearizedSystem base = linearize(p, fixed_point(kind, p));
    TauScan scan = scan_tau_row(base, k, tau_grid, opts);
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        if (!scan.points[i].converged) {
            throw SearchFailed(scan.points[i].error, static_cast<long>(i));
        }
    }
    return scan;
}

std::optional<std::pair<std::size_t, std::size_t>> StabilitySurface::argmin() const {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].points.size(); ++j) {
            const ScanPoint& pt = rows[i].points[j];
            if (!pt.converged) continue;
            if (!best || pt.root.lambda.real() < at(best->first, best->second).root.lambda.real()) {
                best = {i, j};
            }
        }
    }
    return best;
}

namespace {

StabilitySurface prepare_surface(const ModelParams& p, FixedPointKind kind,
                                 std::span<const double> k_grid,
                                 std::span<const double> tau_grid, LinearizedSystem& base) {
    if (k_grid.empty() || tau_grid.empty()) throw DomainError("scan grids must be nonempty");
    base = linearize(p, fixed_point(kind, p));
    StabilitySurface s;
    s.k_grid.assign(k_grid.begin(), k_grid.end());
    s.tau_grid.assign(tau_grid.begin(), tau_grid.end());
    s.rows.resize(k_grid.size());
    return s;
}

} // namespace

StabilitySurface scan_k_tau(const ModelParams& p, FixedPointKind kind,
                            std::span<const double> k_grid, std::span<const double> tau_grid,
                            const RootSearchOptions& opts) {
    LinearizedSystem base;
    StabilitySurface s = prepare_surface(p, kind, k_grid, tau_grid, base);
    const auto n = static_cast<long>(k_grid.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
    for (long i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        s.rows[row] = scan_tau_row(base, k_grid[row], tau_grid, opts);
    }
    return s;
}

StabilitySurface scan_k_tau_serial(const ModelParams& p, FixedPointKind kind,
                                   std::span<const double> k_grid,
                                   std::span<const double> tau_grid,
                                   const RootSearchOptions& opts) {
    LinearizedSystem base;
    StabilitySurface s = prepare_surface(p, kind, k_grid, tau_grid, base);
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        s.rows[i] = scan_tau_row(base, k_grid[i], tau_grid, opts);
    }
    return s;
}

} // namespace tdas
