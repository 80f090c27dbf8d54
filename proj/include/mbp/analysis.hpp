#pragma once

// Environment drift δ, tail functionals of F, regime classification and the
// closed-form stationary moments of the Fréchet/stable model.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbp/distributions.hpp"
#include "mbp/process.hpp"

namespace mbp {

// ---- drift δ = E η = γ + E ln ν ----------------------------------------------

enum class DeltaMethod { ClosedForm, Quadrature };

struct DriftReport {
    ExtendedReal delta;
    DeltaMethod method = DeltaMethod::ClosedForm;
    std::optional<double> delta_closed;
    std::optional<double> delta_quadrature;
    double quadrature_error_estimate = 0.0;
    bool quadrature_converged = false;
    // Threshold exp(-δ); 0 when δ = +inf.
    double e_minus_delta = 0.0;
    // Neither route produced a value.
    bool indeterminate = false;
};

struct DeltaQuadrature {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

// δ = ∫_0^∞ (1 - φ(e^{-x})) dx - ∫_0^∞ φ(e^x) dx. Each half is integrated on
// doubling pieces [0,1], [1,2], [2,4], ... until the integrand drops below 1e-14.
DeltaQuadrature delta_by_quadrature(const EnvironmentLaw& env);
DriftReport compute_delta(const EnvironmentLaw& env);

// ---- tail functionals ----------------------------------------------------------

enum class TailMode { Analytic, NumericGrid };

struct TailFunctionals {
    // Limits of h(x) = x(-ln F(x)).
    ExtendedReal liminf_at_infinity;
    ExtendedReal limsup_at_infinity;
    ExtendedReal liminf_at_zero;
    ExtendedReal limsup_at_zero;
    // Limits of x(1 - F(x)) at infinity (Lamperti functional).
    ExtendedReal integer_liminf;
    ExtendedReal integer_limsup;
    // lim (e^γ x(1-F(x)) - 1) ln x where it is defined.
    std::optional<ExtendedReal> critical_d;
    TailMode mode = TailMode::Analytic;
    // Numeric grid values were still trending over the last two decades.
    bool extrapolated = false;
};

// Analytic limits for every built-in family; `mode = NumericGrid` forces the
// log-spaced grid estimate on x in [1e-8, 1e8].
TailFunctionals tail_functionals(const OffspringLaw& law, TailMode mode = TailMode::Analytic);

// Grid margin required before a numeric functional is allowed to decide a verdict.
inline constexpr double kNumericMargin = 1e-3;

// ---- classification ----------------------------------------------------------

enum class Verdict { Ergodic, Degenerate, Transient, Critical, Indeterminate };
enum class Direction { None, ToInfinity, ToZero, InitialStateDependent };

const char* verdict_name(Verdict v) noexcept;
const char* direction_name(Direction d) noexcept;

struct Margin {
    std::string name;
    double value;  // positive means the named condition holds with room to spare
};

struct Classification {
    Verdict verdict = Verdict::Indeterminate;
    Direction direction = Direction::None;
    DriftReport drift;
    TailFunctionals tails;
    std::vector<Margin> margins;
    std::vector<std::string> conditions_cited;
    std::string note;
};

Classification classify(const OffspringLaw& law, const EnvironmentLaw& env,
                        TailMode mode = TailMode::Analytic);
// Uses ν ≡ 1 for the variants without environment; mbpre_integer is Indeterminate.
Classification classify(const ProcessSpec& spec, TailMode mode = TailMode::Analytic);

nlohmann::json to_json(const Classification& c);

// ---- Fréchet offspring with stable environment --------------------------------

struct MomentProduct {
    double value = 1.0;
    double log_value = 0.0;
    std::size_t terms = 0;
    // Bound on the neglected part of Σ ln Γ(...).
    double remainder_bound = 0.0;
};

// E Z̃^s = ∏_{n>=1} Γ(1 - s/(α β^n)) for F(x) = exp(-x^{-β}), φ(u) = exp(-u^α).
// Requires 0 < α < 1, β > 1, 0 < s < αβ.
MomentProduct stationary_moment_frechet_stable(double alpha, double beta, double s);

// ---- series Σ β^{-n} η_n for the infinite-drift case ---------------------------

struct SeriesCheckOptions {
    std::size_t n_terms = 100;
    std::size_t check_after = 50;
    double increment_threshold = 1e-6;
    double tail_x = 100.0;
    std::size_t tail_samples = 1'000'000;
};

struct SeriesCheckReport {
    double beta = 0.0;
    std::size_t n_paths = 0;
    SeriesCheckOptions options;
    // Fraction of paths whose increments after `check_after` terms all stayed
    // below `increment_threshold`.
    double fraction_stabilized = 0.0;
    std::vector<double> partial_sums;
    // Empirical P(η > x) and x·P(η > x) with its standard error.
    double tail_probability = 0.0;
    double tail_scaled = 0.0;
    double tail_scaled_stderr = 0.0;
};

SeriesCheckReport delta_infinite_series_check(double beta, const EnvironmentLaw& env,
                                              std::size_t n_paths, std::uint64_t seed,
                                              const SeriesCheckOptions& options = {});

// ---- Lyapunov drift diagnostic ----------------------------------------------------

struct DriftPoint {
    double x = 0.0;
    double drift = 0.0;
    double std_error = 0.0;
};

// g(x) = (ln(x/x2))_+ + (ln(x1/x))_+
double lyapunov_g(double x, double x1, double x2);

// Monte Carlo estimate of E[g(Z1) | Z0 = x] - g(x) for each x in the grid.
std::vector<DriftPoint> drift_probe(const OffspringLaw& law, const EnvironmentLaw& env,
                                    const std::vector<double>& grid, double x1, double x2,
                                    std::size_t n_samples, std::uint64_t seed);

} // namespace mbp
