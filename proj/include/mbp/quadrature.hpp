#pragma once

#include <functional>
#include <span>

namespace mbp::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;  // sum of the per-piece error estimates
    bool converged = true;
};

// Adaptive Gauss-Kronrod over [a, b] (b may be +inf), relative tolerance `tol`.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12);

// Same over consecutive pieces [p0,p1], [p1,p2], ...; useful when the integrand
// has a sharp transition at a known location.
Result integrate_pieces(const std::function<double(double)>& f,
                        std::span<const double> breakpoints, double tol = 1e-12);

} // namespace mbp::quad
