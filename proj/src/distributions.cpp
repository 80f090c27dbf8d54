#include "mbp/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mbp/constants.hpp"
#include "mbp/error.hpp"
#include "mbp/quadrature.hpp"

namespace mbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
    if (!ok) throw DomainError(msg);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

bool is_integral(double x) { return std::isfinite(x) && std::floor(x) == x; }

void check_table(const std::vector<double>& values, const std::vector<double>& cdf,
                 const char* what) {
    require(!values.empty() && values.size() == cdf.size(),
            std::string(what) + ": values and cdf must be nonempty and of equal length");
    for (std::size_t i = 0; i < values.size(); ++i) {
        require(std::isfinite(values[i]) && values[i] >= 0.0,
                std::string(what) + ": values must be finite and >= 0");
        require(cdf[i] >= 0.0 && cdf[i] <= 1.0, std::string(what) + ": cdf must lie in [0,1]");
        if (i > 0) {
            require(values[i] > values[i - 1], std::string(what) + ": values must be increasing");
            require(cdf[i] >= cdf[i - 1], std::string(what) + ": cdf must be nondecreasing");
        }
    }
    require(cdf.back() == 1.0, std::string(what) + ": last cdf entry must be 1");
}

// Index of the last table value <= x, or npos.
std::size_t step_index(const std::vector<double>& values, double x) {
    auto it = std::upper_bound(values.begin(), values.end(), x);
    if (it == values.begin()) return std::string::npos;
    return static_cast<std::size_t>(it - values.begin()) - 1;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(9);
    os << x;
    return os.str();
}

void check_state(double x) {
    if (std::isnan(x) || x < 0.0) throw DomainError("state must be >= 0, got " + fmt(x));
}

// F(k) for the integer-tail family.
double integer_tail_cdf(const offspring::IntegerTail& f, double k) {
    const auto K = static_cast<double>(f.head.size());
    if (k < K) return f.head[static_cast<std::size_t>(k)];
    const double floor_value = f.head.empty() ? 0.0 : f.head.back();
    if (k <= 0.0) return floor_value;
    return std::max(floor_value, 1.0 - f.q / k);
}

double integer_tail_log_cdf(const offspring::IntegerTail& f, double k) {
    const auto K = static_cast<double>(f.head.size());
    if (k < K) return std::log(f.head[static_cast<std::size_t>(k)]);
    const double floor_value = f.head.empty() ? 0.0 : f.head.back();
    if (k <= 0.0) return std::log(floor_value);
    const double tail = 1.0 - f.q / k;
    if (tail >= floor_value && f.q < k) return std::log1p(-f.q / k);
    return std::log(floor_value);
}

double integer_tail_quantile_log(const offspring::IntegerTail& f, double log_p) {
    const double u = std::exp(log_p);
    for (std::size_t k = 0; k < f.head.size(); ++k) {
        if (f.head[k] >= u) return static_cast<double>(k);
    }
    if (log_p == 0.0) return kInf;
    const double one_minus_u = -std::expm1(log_p);
    const double lowest = std::max<double>(1.0, static_cast<double>(f.head.size()));
    double k = std::max(lowest, std::ceil(f.q / one_minus_u));
    if (k < 0x1.0p52) {
        // ceil() on a rounded ratio may be off by one in either direction.
        while (integer_tail_log_cdf(f, k) < log_p) k += 1.0;
        while (k - 1.0 >= lowest && integer_tail_log_cdf(f, k - 1.0) >= log_p) k -= 1.0;
    }
    return k;
}

// Same search in probability space, exact at the jump points F(k).
double integer_tail_quantile(const offspring::IntegerTail& f, double u) {
    for (std::size_t k = 0; k < f.head.size(); ++k) {
        if (f.head[k] >= u) return static_cast<double>(k);
    }
    const double lowest = std::max<double>(1.0, static_cast<double>(f.head.size()));
    double k = std::max(lowest, std::ceil(f.q / (1.0 - u)));
    if (k < 0x1.0p52) {
        while (integer_tail_cdf(f, k) < u) k += 1.0;
        while (k - 1.0 >= lowest && integer_tail_cdf(f, k - 1.0) >= u) k -= 1.0;
    }
    return k;
}

// ---- heavy log-tail environment -------------------------------------------
//
// ν = exp(1/W), W uniform on (0,1), so with t = 1/W
//   φ(e^w) = ∫_1^∞ exp(-e^{w+t}) t^{-2} dt.
// The integrand switches from t^{-2} to 0 around t0 = -w. Below t0 - 40 the
// exponential factor is 1 to within e^{-40}, and above t0 + 5 it is below e^{-148}.

// Integrals are taken in s = t - t0, so the exponent e^{w+t} = e^{s} carries no
// cancellation when |w| is large.
struct HeavyPieces {
    double low;    // start of the numerically integrated range (in t)
    double high;   // end of it
    double t0;
};

HeavyPieces heavy_pieces(double w) {
    const double t0 = -w;
    const double low = std::max(1.0, t0 - 40.0);
    const double high = std::max(low, t0) + 5.0;
    return {low, high, t0};
}

// Breakpoints in s.
std::vector<double> heavy_breaks(const HeavyPieces& p) {
    const double lo = p.low - p.t0, hi = p.high - p.t0;
    std::vector<double> b{lo};
    for (double x : {-5.0, -1.0, 0.0, 1.0}) {
        // Slivers narrower than this defeat the relative error estimate.
        if (x > b.back() + 1e-3 && x < hi - 1e-3) b.push_back(x);
    }
    b.push_back(hi);
    return b;
}

// For w >= 0 the mass sits at t = 1. With y = e^{w+t} = Y + x, Y = e^{w+1}:
//   φ(e^w) = e^{-Y} ∫_0^∞ e^{-x} / ((Y + x)(ln(Y + x) - w)²) dx.
double heavy_lst_at_log_large(double w) {
    const double Y = std::exp(w + 1.0);
    auto f = [Y, w](double x) {
        const double y = Y + x;
        const double l = std::log(y) - w;
        return std::exp(-x) / (y * l * l);
    };
    const double breaks[] = {0.0, 1.0, 5.0, 20.0, 50.0};
    const double integral = quad::integrate_pieces(f, breaks, 1e-13).value;
    return std::exp(-Y + std::log(integral));
}

double heavy_lst_at_log(double w) {
    if (w >= 0.0) return heavy_lst_at_log_large(w);
    const HeavyPieces p = heavy_pieces(w);
    const auto breaks = heavy_breaks(p);
    const double t0 = p.t0;
    auto f = [t0](double s) {
        const double t = t0 + s;
        return std::exp(-std::exp(s)) / (t * t);
    };
    const double head = 1.0 - 1.0 / p.low;  // ∫_1^low t^{-2} dt
    return head + quad::integrate_pieces(f, breaks, 1e-13).value;
}

double heavy_lst_complement_at_log(double w) {
    const HeavyPieces p = heavy_pieces(w);
    const auto breaks = heavy_breaks(p);
    const double t0 = p.t0;
    auto f = [t0](double s) {
        const double t = t0 + s;
        return -std::expm1(-std::exp(s)) / (t * t);
    };
    return quad::integrate_pieces(f, breaks, 1e-13).value + 1.0 / p.high;
}

} // namespace

double ExtendedReal::as_double() const {
    switch (kind) {
        case Kind::Finite: return value;
        case Kind::PosInf: return kInf;
        case Kind::NegInf: return -kInf;
        case Kind::Unknown: break;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// ServiceLaw
// ---------------------------------------------------------------------------

ServiceLaw ServiceLaw::exponential(double mean) {
    require(positive_finite(mean), "exponential service: mean must be > 0");
    return ServiceLaw(service::Exponential{mean});
}

ServiceLaw ServiceLaw::deterministic(double value) {
    require(std::isfinite(value) && value > 0.0, "deterministic service: value must be > 0");
    return ServiceLaw(service::Deterministic{value});
}

ServiceLaw ServiceLaw::pareto(double shape, double scale) {
    require(positive_finite(shape), "pareto service: shape must be > 0");
    require(positive_finite(scale), "pareto service: scale must be > 0");
    return ServiceLaw(service::Pareto{shape, scale});
}

ServiceLaw ServiceLaw::empirical(std::vector<double> values, std::vector<double> cdf) {
    check_table(values, cdf, "empirical service");
    return ServiceLaw(service::Empirical{std::move(values), std::move(cdf)});
}

std::string ServiceLaw::name() const {
    return std::visit(overloaded{
        [](const service::Exponential& s) { return "exponential(mean=" + fmt(s.mean) + ")"; },
        [](const service::Deterministic& s) { return "deterministic(" + fmt(s.value) + ")"; },
        [](const service::Pareto& s) {
            return "pareto(shape=" + fmt(s.shape) + ",scale=" + fmt(s.scale) + ")";
        },
        [](const service::Empirical& s) {
            return "empirical(" + std::to_string(s.values.size()) + " points)";
        },
    }, family_);
}

double ServiceLaw::survival(double x) const {
    if (std::isnan(x)) throw DomainError("service survival: NaN argument");
    if (x < 0.0) return 1.0;
    return std::visit(overloaded{
        [x](const service::Exponential& s) { return std::exp(-x / s.mean); },
        [x](const service::Deterministic& s) { return x < s.value ? 1.0 : 0.0; },
        [x](const service::Pareto& s) { return x < s.scale ? 1.0 : std::pow(s.scale / x, s.shape); },
        [x](const service::Empirical& s) {
            const auto i = step_index(s.values, x);
            return i == std::string::npos ? 1.0 : 1.0 - s.cdf[i];
        },
    }, family_);
}

double ServiceLaw::cdf(double x) const {
    if (const auto* e = std::get_if<service::Exponential>(&family_)) {
        return x <= 0.0 ? 0.0 : -std::expm1(-x / e->mean);
    }
    return 1.0 - survival(x);
}

double ServiceLaw::quantile_from_survival(double s) const {
    if (std::isnan(s)) throw DomainError("service quantile: NaN argument");
    if (s >= survival(0.0)) return 0.0;
    return std::visit(overloaded{
        [s](const service::Exponential& e) { return s <= 0.0 ? kInf : -e.mean * std::log(s); },
        [](const service::Deterministic& d) { return d.value; },
        [s](const service::Pareto& p) {
            return s <= 0.0 ? kInf : p.scale * std::pow(s, -1.0 / p.shape);
        },
        [s](const service::Empirical& e) {
            for (std::size_t i = 0; i < e.values.size(); ++i) {
                if (1.0 - e.cdf[i] <= s) return e.values[i];
            }
            return e.values.back();
        },
    }, family_);
}

double ServiceLaw::sample(RngStream& rng) const {
    return quantile_from_survival(rng.uniform());
}

double ServiceLaw::mean() const {
    return std::visit(overloaded{
        [](const service::Exponential& e) { return e.mean; },
        [](const service::Deterministic& d) { return d.value; },
        [](const service::Pareto& p) {
            return p.shape > 1.0 ? p.shape * p.scale / (p.shape - 1.0) : kInf;
        },
        [](const service::Empirical& e) {
            double m = 0.0, prev = 0.0;
            for (std::size_t i = 0; i < e.values.size(); ++i) {
                m += e.values[i] * (e.cdf[i] - prev);
                prev = e.cdf[i];
            }
            return m;
        },
    }, family_);
}

bool ServiceLaw::is_integer() const {
    return std::visit(overloaded{
        [](const service::Deterministic& d) { return is_integral(d.value); },
        [](const service::Empirical& e) {
            return std::all_of(e.values.begin(), e.values.end(), is_integral);
        },
        [](const auto&) { return false; },
    }, family_);
}

// ---------------------------------------------------------------------------
// OffspringLaw
// ---------------------------------------------------------------------------

OffspringLaw OffspringLaw::frechet(double c, double beta) {
    require(positive_finite(c), "frechet: c must be > 0");
    require(positive_finite(beta), "frechet: beta must be > 0");
    return OffspringLaw(offspring::Frechet{c, beta});
}

OffspringLaw OffspringLaw::unit_frechet(double beta) {
    require(positive_finite(beta), "unit_frechet: beta must be > 0");
    return OffspringLaw(offspring::UnitFrechet{beta});
}

OffspringLaw OffspringLaw::gumbel_shifted(double m) {
    require(std::isfinite(m), "gumbel_shifted: m must be finite");
    return OffspringLaw(offspring::GumbelShifted{m});
}

OffspringLaw OffspringLaw::queue_induced(double lambda, ServiceLaw service) {
    require(positive_finite(lambda), "queue_induced: lambda must be > 0");
    return OffspringLaw(offspring::QueueInduced{lambda, std::move(service)});
}

OffspringLaw OffspringLaw::integer_tail(double q, std::vector<double> head) {
    require(positive_finite(q), "integer_tail: q must be > 0");
    for (std::size_t i = 0; i < head.size(); ++i) {
        require(head[i] >= 0.0 && head[i] <= 1.0, "integer_tail: head cdf must lie in [0,1]");
        if (i > 0) require(head[i] >= head[i - 1], "integer_tail: head cdf must be nondecreasing");
    }
    return OffspringLaw(offspring::IntegerTail{q, std::move(head)});
}

OffspringLaw OffspringLaw::empirical(std::vector<double> values, std::vector<double> cdf) {
    check_table(values, cdf, "empirical offspring");
    return OffspringLaw(offspring::Empirical{std::move(values), std::move(cdf)});
}

OffspringLaw OffspringLaw::scaled(const OffspringLaw& base, double lambda) {
    require(positive_finite(lambda), "scaled: lambda must be > 0");
    return OffspringLaw(offspring::Scaled{std::make_shared<const OffspringLaw>(base), lambda});
}

std::string OffspringLaw::name() const {
    return std::visit(overloaded{
        [](const offspring::Frechet& f) {
            return "frechet(c=" + fmt(f.c) + ",beta=" + fmt(f.beta) + ")";
        },
        [](const offspring::UnitFrechet& f) { return "unit_frechet(beta=" + fmt(f.beta) + ")"; },
        [](const offspring::GumbelShifted& f) { return "gumbel_shifted(m=" + fmt(f.m) + ")"; },
        [](const offspring::QueueInduced& f) {
            return "queue_induced(lambda=" + fmt(f.lambda) + "," + f.service.name() + ")";
        },
        [](const offspring::IntegerTail& f) { return "integer_tail(q=" + fmt(f.q) + ")"; },
        [](const offspring::Empirical& f) {
            return "empirical(" + std::to_string(f.values.size()) + " points)";
        },
        [](const offspring::Scaled& f) {
            return "scaled(" + f.base->name() + ",lambda=" + fmt(f.lambda) + ")";
        },
    }, family_);
}

double OffspringLaw::log_cdf(double x) const {
    check_state(x);
    if (std::isinf(x)) return 0.0;
    return std::visit(overloaded{
        [x](const offspring::Frechet& f) {
            return x == 0.0 ? -kInf : -std::pow(x / f.c, -f.beta);
        },
        [x](const offspring::UnitFrechet& f) { return x == 0.0 ? -kInf : -std::pow(x, -f.beta); },
        [x](const offspring::GumbelShifted& f) { return -std::exp(-(x - f.m)); },
        [x](const offspring::QueueInduced& f) { return -f.lambda * f.service.survival(x); },
        [x](const offspring::IntegerTail& f) { return integer_tail_log_cdf(f, std::floor(x)); },
        [x](const offspring::Empirical& f) {
            const auto i = step_index(f.values, x);
            return i == std::string::npos ? -kInf : std::log(f.cdf[i]);
        },
        [x](const offspring::Scaled& f) { return f.base->log_cdf(x / f.lambda) / f.lambda; },
    }, family_);
}

double OffspringLaw::cdf(double x) const {
    check_state(x);
    if (std::isinf(x)) return 1.0;
    if (const auto* f = std::get_if<offspring::IntegerTail>(&family_)) {
        return integer_tail_cdf(*f, std::floor(x));
    }
    if (const auto* f = std::get_if<offspring::Empirical>(&family_)) {
        const auto i = step_index(f->values, x);
        return i == std::string::npos ? 0.0 : f->cdf[i];
    }
    return std::exp(log_cdf(x));
}

double OffspringLaw::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0,1), got " + fmt(u));
    if (const auto* f = std::get_if<offspring::IntegerTail>(&family_)) return integer_tail_quantile(*f, u);
    if (const auto* f = std::get_if<offspring::Empirical>(&family_)) {
        for (std::size_t i = 0; i < f->values.size(); ++i) {
            if (f->cdf[i] >= u) return f->values[i];
        }
        return f->values.back();
    }
    return quantile_log(std::log(u));
}

double OffspringLaw::quantile_log(double log_p) const {
    if (std::isnan(log_p) || log_p > 0.0 || std::isinf(log_p)) {
        throw DomainError("quantile_log: log-probability must lie in (-inf, 0], got " + fmt(log_p));
    }
    return std::visit(overloaded{
        [log_p](const offspring::Frechet& f) { return f.c * std::pow(-log_p, -1.0 / f.beta); },
        [log_p](const offspring::UnitFrechet& f) { return std::pow(-log_p, -1.0 / f.beta); },
        [log_p](const offspring::GumbelShifted& f) {
            return std::max(0.0, f.m - std::log(-log_p));
        },
        [log_p](const offspring::QueueInduced& f) {
            return f.service.quantile_from_survival(-log_p / f.lambda);
        },
        [log_p](const offspring::IntegerTail& f) { return integer_tail_quantile_log(f, log_p); },
        [log_p](const offspring::Empirical& f) {
            const double u = std::exp(log_p);
            for (std::size_t i = 0; i < f.values.size(); ++i) {
                if (f.cdf[i] >= u) return f.values[i];
            }
            return f.values.back();
        },
        [log_p](const offspring::Scaled& f) {
            return f.lambda * f.base->quantile_log(f.lambda * log_p);
        },
    }, family_);
}

StateSet OffspringLaw::state_set() const {
    const bool integer = std::visit(overloaded{
        [](const offspring::IntegerTail&) { return true; },
        [](const offspring::Empirical& f) {
            return std::all_of(f.values.begin(), f.values.end(), is_integral);
        },
        [](const offspring::QueueInduced& f) { return f.service.is_integer(); },
        [](const offspring::Scaled& f) { return f.base->is_integer() && is_integral(f.lambda); },
        [](const auto&) { return false; },
    }, family_);
    return integer ? StateSet::NonNegativeIntegers : StateSet::NonNegativeReals;
}

bool OffspringLaw::is_continuous_strict() const {
    return std::visit(overloaded{
        [](const offspring::Frechet&) { return true; },
        [](const offspring::UnitFrechet&) { return true; },
        [](const offspring::Scaled& f) { return f.base->is_continuous_strict(); },
        [](const auto&) { return false; },
    }, family_);
}

std::optional<offspring::Frechet> OffspringLaw::as_frechet() const {
    return std::visit(overloaded{
        [](const offspring::Frechet& f) -> std::optional<offspring::Frechet> { return f; },
        [](const offspring::UnitFrechet& f) -> std::optional<offspring::Frechet> {
            return offspring::Frechet{1.0, f.beta};
        },
        [](const offspring::Scaled& s) -> std::optional<offspring::Frechet> {
            auto base = s.base->as_frechet();
            if (!base) return std::nullopt;
            // F(x/λ)^{1/λ} = exp(-(x/c')^{-β}) with c' = c λ^{1-1/β}.
            return offspring::Frechet{base->c * std::pow(s.lambda, 1.0 - 1.0 / base->beta),
                                      base->beta};
        },
        [](const auto&) -> std::optional<offspring::Frechet> { return std::nullopt; },
    }, family_);
}

// ---------------------------------------------------------------------------
// EnvironmentLaw
// ---------------------------------------------------------------------------

EnvironmentLaw EnvironmentLaw::degenerate(double a) {
    require(positive_finite(a), "degenerate environment: a must be > 0");
    return EnvironmentLaw(environment::Degenerate{a});
}

EnvironmentLaw EnvironmentLaw::exponential(double theta) {
    require(positive_finite(theta), "exponential environment: theta must be > 0");
    return EnvironmentLaw(environment::Exponential{theta});
}

EnvironmentLaw EnvironmentLaw::strictly_stable(double alpha, double c) {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0,
            "stable environment: alpha must lie in (0,1)");
    require(positive_finite(c), "stable environment: c must be > 0");
    return EnvironmentLaw(environment::StrictlyStable{alpha, c});
}

EnvironmentLaw EnvironmentLaw::heavy_log_tail() {
    return EnvironmentLaw(environment::HeavyLogTail{});
}

EnvironmentLaw EnvironmentLaw::empirical(std::vector<double> values, std::vector<double> probs) {
    require(!values.empty() && values.size() == probs.size(),
            "empirical environment: values and probs must be nonempty and of equal length");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        require(positive_finite(values[i]), "empirical environment: values must be > 0");
        require(probs[i] >= 0.0 && std::isfinite(probs[i]),
                "empirical environment: probs must be >= 0");
        total += probs[i];
    }
    require(std::abs(total - 1.0) <= 1e-9, "empirical environment: probs must sum to 1");
    for (double& p : probs) p /= total;
    return EnvironmentLaw(environment::Empirical{std::move(values), std::move(probs)});
}

std::string EnvironmentLaw::name() const {
    return std::visit(overloaded{
        [](const environment::Degenerate& e) { return "degenerate(a=" + fmt(e.a) + ")"; },
        [](const environment::Exponential& e) { return "exponential(theta=" + fmt(e.theta) + ")"; },
        [](const environment::StrictlyStable& e) {
            return "stable(alpha=" + fmt(e.alpha) + ",c=" + fmt(e.c) + ")";
        },
        [](const environment::HeavyLogTail&) { return std::string("heavy_log_tail"); },
        [](const environment::Empirical& e) {
            return "empirical(" + std::to_string(e.values.size()) + " points)";
        },
    }, family_);
}

namespace {

// φ(e^w).
double lst_at_log(const EnvironmentLaw::Family& family, double w) {
    return std::visit(overloaded{
        [w](const environment::Degenerate& e) { return std::exp(-e.a * std::exp(w)); },
        [w](const environment::Exponential& e) { return 1.0 / (1.0 + e.theta * std::exp(w)); },
        [w](const environment::StrictlyStable& e) {
            return std::exp(-e.c * std::exp(e.alpha * w));
        },
        [w](const environment::HeavyLogTail&) { return heavy_lst_at_log(w); },
        [w](const environment::Empirical& e) {
            double s = 0.0;
            for (std::size_t i = 0; i < e.values.size(); ++i) {
                s += e.probs[i] * std::exp(-e.values[i] * std::exp(w));
            }
            return s;
        },
    }, family);
}

// 1 - φ(e^w).
double lst_complement_at_log(const EnvironmentLaw::Family& family, double w) {
    return std::visit(overloaded{
        [w](const environment::Degenerate& e) { return -std::expm1(-e.a * std::exp(w)); },
        [w](const environment::Exponential& e) {
            const double t = e.theta * std::exp(w);
            return t / (1.0 + t);
        },
        [w](const environment::StrictlyStable& e) {
            return -std::expm1(-e.c * std::exp(e.alpha * w));
        },
        [w](const environment::HeavyLogTail&) { return heavy_lst_complement_at_log(w); },
        [w](const environment::Empirical& e) {
            double s = 0.0;
            for (std::size_t i = 0; i < e.values.size(); ++i) {
                s += e.probs[i] * -std::expm1(-e.values[i] * std::exp(w));
            }
            return s;
        },
    }, family);
}

// ln φ^{-1}(v) by bisection in w = ln u. φ(e^w) is decreasing in w; for v > 1/2
// the comparison is done on the complement to keep relative precision.
double log_lst_inverse_bisect(const EnvironmentLaw::Family& family, double v) {
    auto g = [&](double w) {
        return v <= 0.5 ? v - lst_at_log(family, w)
                        : lst_complement_at_log(family, w) - (1.0 - v);
    };
    double lo = -1.0, hi = 1.0;
    int expand = 0;
    while (g(lo) > 0.0) {
        hi = lo;
        lo = 2.0 * lo - 1.0;
        if (++expand > 1100) throw NumericError("lst_inverse: lower bracket not found");
    }
    while (g(hi) < 0.0) {
        lo = hi;
        hi = 2.0 * hi + 1.0;
        if (++expand > 1100) throw NumericError("lst_inverse: upper bracket not found");
    }
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= 1e-13 || mid == lo || mid == hi) return mid;
        if (g(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    throw NumericError("lst_inverse: bisection did not converge for v=" + fmt(v) +
                       " (bracket [" + fmt(lo) + ", " + fmt(hi) + "])");
}

void check_probability(double v, const char* what) {
    if (!(v > 0.0 && v < 1.0)) {
        throw DomainError(std::string(what) + ": argument must lie in (0,1), got " + fmt(v));
    }
}

void check_lst_arg(double u) {
    if (std::isnan(u) || u < 0.0) throw DomainError("lst: argument must be >= 0, got " + fmt(u));
}

} // namespace

double EnvironmentLaw::lst(double u) const {
    check_lst_arg(u);
    if (u == 0.0) return 1.0;
    if (std::isinf(u)) return 0.0;
    if (const auto* e = std::get_if<environment::Exponential>(&family_)) {
        return 1.0 / (1.0 + e->theta * u);
    }
    return lst_at_log(family_, std::log(u));
}

double EnvironmentLaw::lst_complement(double u) const {
    check_lst_arg(u);
    if (u == 0.0) return 0.0;
    if (std::isinf(u)) return 1.0;
    return lst_complement_at_log(family_, std::log(u));
}

double EnvironmentLaw::lst_at_log_arg(double w) const { return lst_at_log(family_, w); }

double EnvironmentLaw::lst_complement_at_log_arg(double w) const {
    return lst_complement_at_log(family_, w);
}

double EnvironmentLaw::log_lst_inverse(double v) const {
    check_probability(v, "lst_inverse");
    return std::visit(overloaded{
        [v](const environment::Degenerate& e) { return std::log(-std::log(v)) - std::log(e.a); },
        [v](const environment::Exponential& e) {
            return std::log((1.0 - v) / v) - std::log(e.theta);
        },
        [v](const environment::StrictlyStable& e) {
            return (std::log(-std::log(v)) - std::log(e.c)) / e.alpha;
        },
        [this, v](const auto&) { return log_lst_inverse_bisect(family_, v); },
    }, family_);
}

double EnvironmentLaw::lst_inverse(double v) const {
    check_probability(v, "lst_inverse");
    return std::visit(overloaded{
        [v](const environment::Degenerate& e) { return -std::log(v) / e.a; },
        [v](const environment::Exponential& e) { return (1.0 / v - 1.0) / e.theta; },
        [v](const environment::StrictlyStable& e) {
            return std::pow(-std::log(v) / e.c, 1.0 / e.alpha);
        },
        [this, v](const auto&) { return std::exp(log_lst_inverse_bisect(family_, v)); },
    }, family_);
}

double EnvironmentLaw::sample_log_nu(RngStream& rng) const {
    return std::visit(overloaded{
        [](const environment::Degenerate& e) { return std::log(e.a); },
        [&rng](const environment::Exponential& e) {
            return std::log(e.theta) + std::log(rng.exponential());
        },
        [&rng](const environment::StrictlyStable& e) {
            const double u1 = rng.uniform();
            const double u2 = rng.uniform();
            return std::log(e.c) / e.alpha + kanter_log_stable(e.alpha, u1, u2);
        },
        [&rng](const environment::HeavyLogTail&) { return 1.0 / (1.0 - rng.uniform()); },
        [&rng](const environment::Empirical& e) {
            const double u = rng.uniform();
            double acc = 0.0;
            for (std::size_t i = 0; i < e.values.size(); ++i) {
                acc += e.probs[i];
                if (u <= acc) return std::log(e.values[i]);
            }
            return std::log(e.values.back());
        },
    }, family_);
}

double EnvironmentLaw::sample_nu(RngStream& rng) const { return std::exp(sample_log_nu(rng)); }

ExtendedReal EnvironmentLaw::mean_log_nu() const {
    return std::visit(overloaded{
        [](const environment::Degenerate& e) { return ExtendedReal::finite(std::log(e.a)); },
        [](const environment::Exponential& e) {
            return ExtendedReal::finite(std::log(e.theta) - kEulerGamma);
        },
        [](const environment::StrictlyStable& e) {
            return ExtendedReal::finite((kEulerGamma * (1.0 - e.alpha) + std::log(e.c)) / e.alpha);
        },
        [](const environment::HeavyLogTail&) { return ExtendedReal::pos_inf(); },
        [](const environment::Empirical& e) {
            double m = 0.0;
            for (std::size_t i = 0; i < e.values.size(); ++i) m += e.probs[i] * std::log(e.values[i]);
            return ExtendedReal::finite(m);
        },
    }, family_);
}

bool EnvironmentLaw::is_degenerate_one() const {
    const auto* d = std::get_if<environment::Degenerate>(&family_);
    return d != nullptr && d->a == 1.0;
}

double heavy_log_tail_from_uniform(double u) {
    check_probability(u, "heavy_log_tail_from_uniform");
    return std::exp(1.0 / (1.0 - u));
}

double kanter_log_stable(double alpha, double u1, double u2) {
    const double theta = kPi * u1;
    const double log_a = (std::log(std::sin(alpha * theta)) - std::log(std::sin(theta))) /
                             (1.0 - alpha) +
                         std::log(std::sin((1.0 - alpha) * theta)) -
                         std::log(std::sin(alpha * theta));
    const double e = -std::log(u2);
    return (1.0 - alpha) / alpha * (log_a - std::log(e));
}

} // namespace mbp
