// quadrature.hpp: panelled adaptive Gauss-Kronrod integration on a finite
// interval with caller-supplied breakpoints.

#pragma once

#include <functional>
#include <vector>

namespace tdas {

struct QuadratureResult {
    double value{0.0};
    double error_estimate{0.0};
    std::size_t panels{0};
};

struct QuadratureOptions {
    // Relative tolerance requested from each panel. The reported error is
    // |K15 - G7|, which overstates the Kronrod error by orders of magnitude.
    double rel_tol{1e-9};
    // Bisection depth of the adaptive Gauss-Kronrod rule per panel.
    unsigned max_depth{12};
    // Panels are split further so none is wider than this (0 disables).
    double max_panel_width{0.0};
};

// Sorted, deduplicated breakpoints clipped to [a, b], always containing both
// endpoints, then subdivided so no panel exceeds max_panel_width.
[[nodiscard]] std::vector<double> make_panels(double a, double b, std::vector<double> breakpoints,
                                              double max_panel_width);

// Sum of adaptive G7-K15 integrals over consecutive breakpoints.
[[nodiscard]] QuadratureResult integrate_panels(const std::function<double(double)>& f,
                                                const std::vector<double>& panels,
                                                const QuadratureOptions& opts = {});

} // namespace tdas
