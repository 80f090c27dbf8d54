#include "mbp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mbp::quad {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr unsigned kMaxDepth = 18;

struct Piece {
    double value;
    double error;
    double l1;
};

// One non-adaptive 31-point Kronrod evaluation with its embedded Gauss error.
Piece rule(const std::function<double(double)>& f, double a, double b) {
    Piece p{};
    p.value = Rule::integrate(f, a, b, 0, 0.0, &p.error, &p.l1);
    return p;
}

// Bisects until each piece meets the relative tolerance or its share of the
// absolute target set by the whole-interval L1 norm.
void adapt(const std::function<double(double)>& f, double a, double b, const Piece& whole,
           double tol, double abs_per_unit, unsigned depth, Result& out) {
    // The rule's error estimate bottoms out near 1e-15 in absolute terms.
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * whole.l1 + 4e-15;
    const double target = std::max({tol * whole.l1, abs_per_unit * (b - a), floor});
    if (whole.error <= target || !(whole.error > 0.0)) {
        out.value += whole.value;
        out.error += whole.error;
        return;
    }
    const double m = 0.5 * (a + b);
    if (depth >= kMaxDepth || !(m > a && m < b)) {
        out.value += whole.value;
        out.error += whole.error;
        out.converged = false;
        return;
    }
    adapt(f, a, m, rule(f, a, m), tol, abs_per_unit, depth + 1, out);
    adapt(f, m, b, rule(f, m, b), tol, abs_per_unit, depth + 1, out);
}

Result integrate_finite(const std::function<double(double)>& f, double a, double b, double tol) {
    Result r;
    r.value = 0.0;
    r.error = 0.0;
    if (a == b) return r;
    const Piece whole = rule(f, a, b);
    // Absolute floor: rounding in the rule itself is about 1e-16 of the L1 norm.
    const double abs_per_unit = std::max(tol, 1e-15) * whole.l1 / (b - a);
    adapt(f, a, b, whole, tol, abs_per_unit, 0, r);
    r.converged = r.converged && std::isfinite(r.value);
    return r;
}

} // namespace

Result integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (std::isinf(b)) {
        // x = a + t/(1-t) maps [0,1) onto [a,∞).
        auto g = [&f, a](double t) {
            if (t >= 1.0) return 0.0;
            const double s = 1.0 - t;
            return f(a + t / s) / (s * s);
        };
        return integrate_finite(g, 0.0, 1.0, tol);
    }
    return integrate_finite(f, a, b, tol);
}

Result integrate_pieces(const std::function<double(double)>& f,
                        std::span<const double> breakpoints, double tol) {
    Result total;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i + 1] > breakpoints[i])) continue;
        const Result piece = integrate(f, breakpoints[i], breakpoints[i + 1], tol);
        total.value += piece.value;
        total.error += piece.error;
        total.converged = total.converged && piece.converged;
    }
    return total;
}

} // namespace mbp::quad
