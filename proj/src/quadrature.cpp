#include "tdas/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tdas/errors.hpp"

namespace tdas {

std::vector<double> make_panels(double a, double b, std::vector<double> breakpoints,
                                double max_panel_width) {
    if (!(b > a)) throw DomainError("quadrature interval must have b > a");
    std::erase_if(breakpoints, [&](double x) { return !(x > a && x < b); });
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
    if (!(max_panel_width > 0.0)) return breakpoints;

    std::vector<double> out;
    out.reserve(breakpoints.size());
    out.push_back(breakpoints.front());
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        const double lo = breakpoints[i - 1], hi = breakpoints[i];
        const auto pieces = static_cast<std::size_t>(std::ceil((hi - lo) / max_panel_width));
        for (std::size_t j = 1; j < pieces; ++j) {
            out.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(pieces));
        }
        out.push_back(hi);
    }
    return out;
}

QuadratureResult integrate_panels(const std::function<double(double)>& f,
                                  const std::vector<double>& panels, const QuadratureOptions& opts) {
    using boost::math::quadrature::gauss_kronrod;
    QuadratureResult r;
    // Accumulate small contributions first so the sum does not depend on
    // where the dominant panel sits.
    std::vector<double> parts;
    parts.reserve(panels.size());
    for (std::size_t i = 1; i < panels.size(); ++i) {
        // Map each panel onto [-1, 1]: the library compares its unscaled
        // error estimate against a scaled tolerance, which only agrees for
        // panels of half-width 1.
        const double mid = 0.5 * (panels[i - 1] + panels[i]);
        const double half = 0.5 * (panels[i] - panels[i - 1]);
        auto unit = [&](double t) { return half * f(mid + half * t); };
        double err = 0.0;
        const double v =
            gauss_kronrod<double, 15>::integrate(unit, -1.0, 1.0, opts.max_depth, opts.rel_tol, &err);
        if (!std::isfinite(v)) throw SingularAtFrequency("non-finite integrand on a quadrature panel");
        parts.push_back(v);
        r.error_estimate += err;
    }
    std::sort(parts.begin(), parts.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
    for (double v : parts) r.value += v;
    r.panels = parts.size();
    return r;
}

} // namespace tdas
