#pragma once

// Offspring laws F, service-time laws B and environment laws G.
//
// Every law is an immutable value. The functionals exposed here are exactly
// the ones the step recursions and the classifier consume: CDF, generalized
// inverse, atom at zero, and for environments the Laplace-Stieltjes transform
// φ(u) = E exp(-uν) with its inverse.

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mbp/rng.hpp"

namespace mbp {

// Real number that may be +/-infinity or carry no known value.
struct ExtendedReal {
    enum class Kind { Finite, PosInf, NegInf, Unknown };

    Kind kind = Kind::Unknown;
    double value = 0.0;

    static ExtendedReal finite(double v) { return {Kind::Finite, v}; }
    static ExtendedReal pos_inf() { return {Kind::PosInf, 0.0}; }
    static ExtendedReal neg_inf() { return {Kind::NegInf, 0.0}; }
    static ExtendedReal unknown() { return {Kind::Unknown, 0.0}; }

    bool is_finite() const { return kind == Kind::Finite; }
    bool is_known() const { return kind != Kind::Unknown; }
    // ±inf map to IEEE infinities, Unknown to NaN.
    double as_double() const;
};

// ---------------------------------------------------------------------------
// Service-time laws
// ---------------------------------------------------------------------------

namespace service {
struct Exponential { double mean; };
struct Deterministic { double value; };
// B(x) = 1 - (scale/x)^shape for x >= scale.
struct Pareto { double shape; double scale; };
// Step CDF: B(x) = cdf[i] for values[i] <= x < values[i+1].
struct Empirical { std::vector<double> values; std::vector<double> cdf; };
} // namespace service

class ServiceLaw {
public:
    using Family = std::variant<service::Exponential, service::Deterministic,
                                service::Pareto, service::Empirical>;

    static ServiceLaw exponential(double mean);
    static ServiceLaw deterministic(double value);
    static ServiceLaw pareto(double shape, double scale);
    static ServiceLaw empirical(std::vector<double> values, std::vector<double> cdf);

    const Family& family() const noexcept { return family_; }
    std::string name() const;

    double cdf(double x) const;
    // B̄(x) = 1 - B(x), computed without cancellation where the family allows.
    double survival(double x) const;
    // Smallest x >= 0 with B̄(x) <= s. Returns 0 when s >= B̄(0).
    double quantile_from_survival(double s) const;
    double sample(RngStream& rng) const;
    double mean() const;
    // True when B is supported on the nonnegative integers.
    bool is_integer() const;

private:
    explicit ServiceLaw(Family f) : family_(std::move(f)) {}
    Family family_;
};

// ---------------------------------------------------------------------------
// Offspring laws
// ---------------------------------------------------------------------------

class OffspringLaw;

namespace offspring {
// F(x) = exp(-(x/c)^(-beta)), x > 0.
struct Frechet { double c; double beta; };
// F(x) = exp(-x^(-beta)).
struct UnitFrechet { double beta; };
// F(x) = exp(-exp(-(x - m))) restricted to [0, inf); F(0) = exp(-e^m) is kept as an atom.
struct GumbelShifted { double m; };
// F(x) = exp(-lambda * B̄(x)): stage-duration law of the gated infinite-server queue.
struct QueueInduced { double lambda; ServiceLaw service; };
// Law on Z+ with F(k) = head[k] for k < head.size(), otherwise
// F(k) = max(head.back(), 1 - q/k) (and 0 for k = 0 when head is empty),
// so that x(1 - F(x)) -> q.
struct IntegerTail { double q; std::vector<double> head; };
// Sorted (value, CDF) table with step interpolation.
struct Empirical { std::vector<double> values; std::vector<double> cdf; };
// F_λ(x) = F(x/λ)^(1/λ): law of λZ when Z has offspring law F.
struct Scaled { std::shared_ptr<const OffspringLaw> base; double lambda; };
} // namespace offspring

enum class StateSet { NonNegativeReals, NonNegativeIntegers };

class OffspringLaw {
public:
    using Family = std::variant<offspring::Frechet, offspring::UnitFrechet,
                                offspring::GumbelShifted, offspring::QueueInduced,
                                offspring::IntegerTail, offspring::Empirical,
                                offspring::Scaled>;

    static OffspringLaw frechet(double c, double beta);
    static OffspringLaw unit_frechet(double beta);
    static OffspringLaw gumbel_shifted(double m);
    static OffspringLaw queue_induced(double lambda, ServiceLaw service);
    static OffspringLaw integer_tail(double q, std::vector<double> head = {});
    static OffspringLaw empirical(std::vector<double> values, std::vector<double> cdf);
    static OffspringLaw scaled(const OffspringLaw& base, double lambda);

    const Family& family() const noexcept { return family_; }
    std::string name() const;

    // F(x). Throws DomainError for x < 0 or NaN; +inf gives 1.
    double cdf(double x) const;
    // ln F(x), accurate where F(x) is close to 1.
    double log_cdf(double x) const;
    // inf{x : F(x) >= u} for u in (0,1). Throws DomainError otherwise.
    double quantile(double u) const;
    // Same generalized inverse addressed by log_p = ln u in (-inf, 0); keeps
    // precision when u is within rounding of 1 (large populations).
    double quantile_log(double log_p) const;

    double atom_at_zero() const { return cdf(0.0); }
    StateSet state_set() const;
    bool is_integer() const { return state_set() == StateSet::NonNegativeIntegers; }
    // Continuous, strictly increasing and F(0) = 0: the Gumbel transform applies.
    bool is_continuous_strict() const;

    // (c, beta) when this law is a Fréchet law, possibly after scaling.
    std::optional<offspring::Frechet> as_frechet() const;

private:
    explicit OffspringLaw(Family f) : family_(std::move(f)) {}
    Family family_;
};

// ---------------------------------------------------------------------------
// Environment laws
// ---------------------------------------------------------------------------

namespace environment {
// ν ≡ a.
struct Degenerate { double a; };
// Exponential with mean theta: φ(u) = 1/(1 + theta u).
struct Exponential { double theta; };
// One-sided strictly stable: φ(u) = exp(-c u^alpha), 0 < alpha < 1.
struct StrictlyStable { double alpha; double c; };
// G(x) = 1 - 1/ln x for x >= e. E ln ν = +inf.
struct HeavyLogTail {};
// Finite table of positive values with probabilities.
struct Empirical { std::vector<double> values; std::vector<double> probs; };
} // namespace environment

class EnvironmentLaw {
public:
    using Family = std::variant<environment::Degenerate, environment::Exponential,
                                environment::StrictlyStable, environment::HeavyLogTail,
                                environment::Empirical>;

    static EnvironmentLaw degenerate(double a);
    static EnvironmentLaw exponential(double theta);
    static EnvironmentLaw strictly_stable(double alpha, double c);
    static EnvironmentLaw heavy_log_tail();
    static EnvironmentLaw empirical(std::vector<double> values, std::vector<double> probs);

    const Family& family() const noexcept { return family_; }
    std::string name() const;

    // φ(u) = E exp(-uν), u >= 0.
    double lst(double u) const;
    // 1 - φ(u), without cancellation for small u.
    double lst_complement(double u) const;
    // φ^{-1}(v) for v in (0,1). Closed forms for Degenerate, Exponential and
    // StrictlyStable; bracketed bisection otherwise.
    double lst_inverse(double v) const;
    // ln φ^{-1}(v) = -η for the noise term of the autoregression. Finite even
    // where φ^{-1}(v) itself would underflow (heavy log-tail law, v near 1).
    double log_lst_inverse(double v) const;

    // φ(e^w) and 1 - φ(e^w): the LST addressed on a logarithmic argument.
    double lst_at_log_arg(double w) const;
    double lst_complement_at_log_arg(double w) const;

    // ln ν for one draw from G. Kept in log space: HeavyLogTail and small-alpha
    // stable draws overflow double precision.
    double sample_log_nu(RngStream& rng) const;
    double sample_nu(RngStream& rng) const;

    // E ln ν, exact where known.
    ExtendedReal mean_log_nu() const;

    bool is_degenerate_one() const;

private:
    explicit EnvironmentLaw(Family f) : family_(std::move(f)) {}
    Family family_;
};

// Inverse transform of the log-tail law: ν = exp(1/(1-u)).
double heavy_log_tail_from_uniform(double u);

// Kanter's representation of the one-sided stable law with φ(u) = exp(-u^alpha):
// ν = (A(θ)/E)^((1-alpha)/alpha), θ = π u1, E = -ln u2. Returns ln ν.
double kanter_log_stable(double alpha, double u1, double u2);

} // namespace mbp
