#include "mbp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mbp/constants.hpp"
#include "mbp/error.hpp"
#include "mbp/kernels.hpp"
#include "mbp/quadrature.hpp"
#include "mbp/report.hpp"

namespace mbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using ER = ExtendedReal;

ER from_double(double x) {
    if (std::isnan(x)) return ER::unknown();
    if (x == kInf) return ER::pos_inf();
    if (x == -kInf) return ER::neg_inf();
    return ER::finite(x);
}

// ∫_0^X f on doubling pieces until f(X) < 1e-14.
DeltaQuadrature integrate_decaying(const std::function<double(double)>& f) {
    DeltaQuadrature out;
    out.converged = true;
    double a = 0.0, b = 1.0;
    while (true) {
        const quad::Result piece = quad::integrate(f, a, b, 1e-12);
        out.value += piece.value;
        out.error += piece.error;
        out.converged = out.converged && piece.converged;
        if (std::abs(f(b)) < 1e-14) break;
        a = b;
        b *= 2.0;
        if (b > 1e7) {
            out.converged = false;
            break;
        }
    }
    return out;
}

// Tri-state outcome of comparing a tail functional with a threshold.
enum class Tri { Yes, No, Unknown };

Tri less_than(const ER& value, double threshold) {
    if (!value.is_known()) return Tri::Unknown;
    return value.as_double() < threshold ? Tri::Yes : Tri::No;
}

Tri greater_than(const ER& value, double threshold) {
    if (!value.is_known()) return Tri::Unknown;
    return value.as_double() > threshold ? Tri::Yes : Tri::No;
}

// liminf_{x->inf} h < thr, decided on the numeric grid only with margin.
Tri upper_tail_condition(const TailFunctionals& t, double thr) {
    if (t.mode == TailMode::Analytic) return less_than(t.liminf_at_infinity, thr);
    if (t.limsup_at_infinity.as_double() <= thr - kNumericMargin) return Tri::Yes;
    if (t.liminf_at_infinity.as_double() >= thr + kNumericMargin) return Tri::No;
    return Tri::Unknown;
}

// liminf_{x->0} h > thr.
Tri lower_tail_condition(const TailFunctionals& t, double thr) {
    if (t.mode == TailMode::Analytic) return greater_than(t.liminf_at_zero, thr);
    if (t.liminf_at_zero.as_double() >= thr + kNumericMargin) return Tri::Yes;
    if (t.limsup_at_zero.as_double() <= thr - kNumericMargin) return Tri::No;
    return Tri::Unknown;
}

double signed_gap(double a, double b) {
    if (std::isinf(a) && std::isinf(b) && a == b) return 0.0;
    return a - b;
}

TailFunctionals analytic_tails(const OffspringLaw& law);

// Limits of h(x) = c^β x^{1-β} and of x(1 - F(x)).
TailFunctionals frechet_tails(double c, double beta) {
    TailFunctionals t;
    if (beta > 1.0) {
        t.liminf_at_infinity = t.limsup_at_infinity = ER::finite(0.0);
        t.liminf_at_zero = t.limsup_at_zero = ER::pos_inf();
    } else if (beta < 1.0) {
        t.liminf_at_infinity = t.limsup_at_infinity = ER::pos_inf();
        t.liminf_at_zero = t.limsup_at_zero = ER::finite(0.0);
    } else {
        t.liminf_at_infinity = t.limsup_at_infinity = ER::finite(c);
        t.liminf_at_zero = t.limsup_at_zero = ER::finite(c);
    }
    t.integer_liminf = t.integer_limsup = t.liminf_at_infinity;
    if (beta == 1.0) {
        // x(1 - e^{-c/x}) = c - c²/(2x) + O(x^{-2}): d = 0 at the critical value.
        t.critical_d = c > kExpMinusGamma ? ER::pos_inf()
                                          : (c < kExpMinusGamma ? ER::neg_inf() : ER::finite(0.0));
    }
    return t;
}

TailFunctionals analytic_tails(const OffspringLaw& law) {
    if (const auto fr = law.as_frechet()) return frechet_tails(fr->c, fr->beta);
    return std::visit(overloaded{
        [](const offspring::GumbelShifted&) {
            TailFunctionals t;
            t.liminf_at_infinity = t.limsup_at_infinity = ER::finite(0.0);
            t.liminf_at_zero = t.limsup_at_zero = ER::finite(0.0);
            t.integer_liminf = t.integer_limsup = ER::finite(0.0);
            return t;
        },
        [](const offspring::QueueInduced& q) {
            TailFunctionals t;
            ER at_inf = ER::finite(0.0);
            if (const auto* p = std::get_if<service::Pareto>(&q.service.family())) {
                if (p->shape == 1.0) at_inf = ER::finite(q.lambda * p->scale);
                else if (p->shape < 1.0) at_inf = ER::pos_inf();
            }
            t.liminf_at_infinity = t.limsup_at_infinity = at_inf;
            t.liminf_at_zero = t.limsup_at_zero = ER::finite(0.0);
            t.integer_liminf = t.integer_limsup = at_inf;
            return t;
        },
        [&law](const offspring::IntegerTail& f) {
            TailFunctionals t;
            t.liminf_at_infinity = t.limsup_at_infinity = ER::finite(f.q);
            const ER at_zero = law.atom_at_zero() > 0.0 ? ER::finite(0.0) : ER::pos_inf();
            t.liminf_at_zero = t.limsup_at_zero = at_zero;
            t.integer_liminf = t.integer_limsup = ER::finite(f.q);
            // x(1-F(x)) = q x/⌊x⌋ -> q, and (x/⌊x⌋ - 1) ln x -> 0.
            t.critical_d = f.q > kExpMinusGamma ? ER::pos_inf()
                                                : (f.q < kExpMinusGamma ? ER::neg_inf() : ER::finite(0.0));
            return t;
        },
        [&law](const offspring::Empirical&) {
            TailFunctionals t;
            t.liminf_at_infinity = t.limsup_at_infinity = ER::finite(0.0);
            const ER at_zero = law.atom_at_zero() > 0.0 ? ER::finite(0.0) : ER::pos_inf();
            t.liminf_at_zero = t.limsup_at_zero = at_zero;
            t.integer_liminf = t.integer_limsup = ER::finite(0.0);
            return t;
        },
        [](const offspring::Scaled& s) {
            // h_λ(x) = h(x/λ): every limit is inherited.
            return analytic_tails(*s.base);
        },
        [](const auto&) -> TailFunctionals {
            throw std::logic_error("analytic_tails: family handled by as_frechet");
        },
    }, law.family());
}

TailFunctionals numeric_tails(const OffspringLaw& law) {
    TailFunctionals t;
    t.mode = TailMode::NumericGrid;
    constexpr int kPerDecade = 10;
    auto h = [&law](double x) { return x * -law.log_cdf(x); };
    auto k = [&law](double x) { return x * -std::expm1(law.log_cdf(x)); };
    auto range = [&](double lo_exp, double hi_exp, auto&& fn) {
        double lo = kInf, hi = -kInf;
        std::vector<double> v;
        for (int i = 0; i <= 2 * kPerDecade; ++i) {
            const double x = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (2.0 * kPerDecade));
            const double y = fn(x);
            lo = std::min(lo, y);
            hi = std::max(hi, y);
            v.push_back(y);
        }
        return std::pair{std::pair{lo, hi}, v};
    };
    const auto [inf_range, inf_vals] = range(6.0, 8.0, h);
    const auto [zero_range, zero_vals] = range(-8.0, -6.0, h);
    const auto [int_range, int_vals] = range(6.0, 8.0, k);
    t.liminf_at_infinity = from_double(inf_range.first);
    t.limsup_at_infinity = from_double(inf_range.second);
    t.liminf_at_zero = from_double(zero_range.first);
    t.limsup_at_zero = from_double(zero_range.second);
    t.integer_liminf = from_double(int_range.first);
    t.integer_limsup = from_double(int_range.second);
    auto trending = [](const std::vector<double>& v) {
        const double a = v.front(), b = v.back();
        if (std::isinf(a) || std::isinf(b)) return false;
        return std::abs(a - b) > kNumericMargin * std::max(1.0, std::abs(b));
    };
    t.extrapolated = trending(inf_vals) || trending(zero_vals);
    return t;
}

std::vector<std::string>& cite(Classification& c, const char* what) {
    c.conditions_cited.emplace_back(what);
    return c.conditions_cited;
}

constexpr const char* kUpperTail = "upper_tail: liminf_{x->inf} x(-ln F(x)) < exp(-delta)";
constexpr const char* kLowerTail = "lower_tail: liminf_{x->0} x(-ln F(x)) > exp(-delta)";
constexpr const char* kAtom = "atom_at_zero: F(0) > 0";
constexpr const char* kLampertiRec = "lamperti_recurrence: limsup x(1-F(x)) < exp(-gamma)";
constexpr const char* kLampertiTrans = "lamperti_transience: liminf x(1-F(x)) > exp(-gamma)";
constexpr const char* kLampertiCrit =
    "lamperti_critical: (e^gamma x(1-F(x)) - 1) ln x -> d compared with pi^2/12";
constexpr const char* kFrechetWalk = "frechet_unit_index: ln c + delta drift of the zeta random walk";
constexpr const char* kFrechetExpanding = "frechet_index_below_one: zeta map expands";

void classify_lamperti(Classification& c, const OffspringLaw& law) {
    const TailFunctionals& t = c.tails;
    const double thr = kExpMinusGamma;
    const double upper = t.integer_limsup.as_double();
    const double lower = t.integer_liminf.as_double();
    c.margins.push_back({"lamperti_recurrence", signed_gap(thr, upper)});
    c.margins.push_back({"lamperti_transience", signed_gap(lower, thr)});
    const bool atom = law.atom_at_zero() > 0.0;
    if (upper < thr) {
        if (atom) {
            c.verdict = Verdict::Degenerate;
            cite(c, kLampertiRec);
            cite(c, kAtom);
        } else {
            c.verdict = Verdict::Ergodic;
            c.note = "positive recurrent";
            cite(c, kLampertiRec);
        }
        return;
    }
    if (lower > thr) {
        if (atom) {
            c.verdict = Verdict::Indeterminate;
            c.note = "transience condition holds but F(0) > 0 allows absorption";
        } else {
            c.verdict = Verdict::Transient;
            c.direction = Direction::ToInfinity;
        }
        cite(c, kLampertiTrans);
        return;
    }
    cite(c, kLampertiCrit);
    if (!t.critical_d || !t.critical_d->is_known()) {
        c.verdict = Verdict::Critical;
        c.note = "critical tail constant; refinement d undefined";
        return;
    }
    const double d = t.critical_d->as_double();
    c.margins.push_back({"lamperti_critical", signed_gap(kPiSquaredOver12, d)});
    if (atom) {
        c.verdict = Verdict::Indeterminate;
        c.note = "critical case with F(0) > 0";
    } else if (d < kPiSquaredOver12) {
        c.verdict = Verdict::Ergodic;
        c.note = "recurrent (critical case, d < pi^2/12)";
    } else if (d > kPiSquaredOver12) {
        c.verdict = Verdict::Transient;
        c.direction = Direction::ToInfinity;
    } else {
        c.verdict = Verdict::Critical;
    }
}

} // namespace

// ---------------------------------------------------------------------------

DeltaQuadrature delta_by_quadrature(const EnvironmentLaw& env) {
    const DeltaQuadrature upper =
        integrate_decaying([&env](double x) { return env.lst_complement_at_log_arg(-x); });
    const DeltaQuadrature lower =
        integrate_decaying([&env](double x) { return env.lst_at_log_arg(x); });
    return {upper.value - lower.value, upper.error + lower.error,
            upper.converged && lower.converged};
}

DriftReport compute_delta(const EnvironmentLaw& env) {
    DriftReport r;
    const ExtendedReal mean_log = env.mean_log_nu();
    if (mean_log.kind == ExtendedReal::Kind::PosInf) {
        // The positive half of the integral diverges; nothing to cross-check.
        r.delta = ExtendedReal::pos_inf();
        r.method = DeltaMethod::ClosedForm;
        r.e_minus_delta = 0.0;
        return r;
    }
    if (mean_log.is_finite()) r.delta_closed = kEulerGamma + mean_log.value;

    const DeltaQuadrature q = delta_by_quadrature(env);
    r.quadrature_converged = q.converged;
    r.quadrature_error_estimate = q.error;
    if (q.converged) r.delta_quadrature = q.value;

    if (r.delta_closed) {
        r.delta = ExtendedReal::finite(*r.delta_closed);
        r.method = DeltaMethod::ClosedForm;
    } else if (r.delta_quadrature) {
        r.delta = ExtendedReal::finite(*r.delta_quadrature);
        r.method = DeltaMethod::Quadrature;
    } else {
        r.delta = ExtendedReal::unknown();
        r.method = DeltaMethod::Quadrature;
        r.indeterminate = true;
    }
    r.e_minus_delta = r.delta.is_finite() ? std::exp(-r.delta.value) : 0.0;
    return r;
}

TailFunctionals tail_functionals(const OffspringLaw& law, TailMode mode) {
    return mode == TailMode::Analytic ? analytic_tails(law) : numeric_tails(law);
}

const char* verdict_name(Verdict v) noexcept {
    switch (v) {
        case Verdict::Ergodic: return "Ergodic";
        case Verdict::Degenerate: return "Degenerate";
        case Verdict::Transient: return "Transient";
        case Verdict::Critical: return "Critical";
        case Verdict::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

const char* direction_name(Direction d) noexcept {
    switch (d) {
        case Direction::None: return "none";
        case Direction::ToInfinity: return "to_infinity";
        case Direction::ToZero: return "to_zero";
        case Direction::InitialStateDependent: return "initial_state_dependent";
    }
    return "none";
}

Classification classify(const OffspringLaw& law, const EnvironmentLaw& env, TailMode mode) {
    Classification c;
    c.drift = compute_delta(env);
    c.tails = tail_functionals(law, mode);

    if (law.is_integer() && env.is_degenerate_one()) {
        classify_lamperti(c, law);
        return c;
    }
    if (c.drift.delta.kind == ExtendedReal::Kind::Unknown) {
        c.note = "drift delta could not be computed";
        return c;
    }
    if (c.drift.delta.kind == ExtendedReal::Kind::PosInf) {
        c.note = "delta = +inf: threshold exp(-delta) = 0, no finite-drift condition applies";
        return c;
    }
    const double delta = c.drift.delta.value;
    const double thr = c.drift.e_minus_delta;

    if (const auto fr = law.as_frechet()) {
        if (fr->beta == 1.0) {
            // ζ' = ζ + ln c + η: a random walk with drift ln c + δ.
            const double drift = std::log(fr->c) + delta;
            const double tol = 4.0 * std::numeric_limits<double>::epsilon() *
                               std::max({1.0, std::abs(delta), std::abs(std::log(fr->c))});
            c.margins.push_back({"walk_drift", drift});
            cite(c, kFrechetWalk);
            if (std::abs(drift) <= tol) {
                c.verdict = Verdict::Critical;
                c.note = "null-recurrent oscillation between 0 and +inf";
            } else {
                c.verdict = Verdict::Transient;
                c.direction = drift > 0.0 ? Direction::ToInfinity : Direction::ToZero;
            }
            return c;
        }
        if (fr->beta < 1.0) {
            c.verdict = Verdict::Transient;
            c.direction = Direction::InitialStateDependent;
            cite(c, kFrechetExpanding);
            return c;
        }
    }

    const Tri upper = upper_tail_condition(c.tails, thr);
    const Tri lower = lower_tail_condition(c.tails, thr);
    c.margins.push_back({"upper_tail", signed_gap(thr, c.tails.liminf_at_infinity.as_double())});
    c.margins.push_back({"lower_tail", signed_gap(c.tails.liminf_at_zero.as_double(), thr)});
    const bool atom = law.atom_at_zero() > 0.0;

    if (atom && upper == Tri::Yes) {
        c.verdict = Verdict::Degenerate;
        cite(c, kUpperTail);
        cite(c, kAtom);
        return c;
    }
    if (upper == Tri::Yes && lower == Tri::Yes) {
        c.verdict = Verdict::Ergodic;
        cite(c, kUpperTail);
        cite(c, kLowerTail);
        return c;
    }
    if (upper == Tri::Unknown || lower == Tri::Unknown) {
        c.note = "numeric tail functional within margin of the threshold";
    } else {
        c.note = "no sufficient condition holds";
    }
    return c;
}

Classification classify(const ProcessSpec& spec, TailMode mode) {
    switch (spec.variant) {
        case Variant::Mbpplre: return classify(spec.offspring, spec.environment, mode);
        case Variant::MbpInteger:
        case Variant::MbpContinuous:
            return classify(spec.offspring, EnvironmentLaw::degenerate(1.0), mode);
        case Variant::MbpreInteger: break;
    }
    Classification c;
    c.drift = compute_delta(spec.environment);
    c.note = "environment is not of power-law form; no criterion available";
    cite(c, "no_power_law_environment");
    return c;
}

nlohmann::json to_json(const Classification& c) {
    nlohmann::json margins = nlohmann::json::object();
    for (const auto& m : c.margins) margins[m.name] = json_number(m.value);
    nlohmann::json tails = {
        {"mode", c.tails.mode == TailMode::Analytic ? "analytic" : "numeric_grid"},
        {"liminf_at_infinity", to_json(c.tails.liminf_at_infinity)},
        {"limsup_at_infinity", to_json(c.tails.limsup_at_infinity)},
        {"liminf_at_zero", to_json(c.tails.liminf_at_zero)},
        {"integer_liminf", to_json(c.tails.integer_liminf)},
        {"integer_limsup", to_json(c.tails.integer_limsup)},
        {"extrapolated", c.tails.extrapolated},
    };
    if (c.tails.critical_d) tails["critical_d"] = to_json(*c.tails.critical_d);
    nlohmann::json out = {
        {"verdict", verdict_name(c.verdict)},
        {"direction", direction_name(c.direction)},
        {"delta", to_json(c.drift.delta)},
        {"delta_method", c.drift.method == DeltaMethod::ClosedForm ? "closed_form" : "quadrature"},
        {"thresholds",
         {{"e_minus_delta", json_number(c.drift.e_minus_delta)},
          {"e_minus_gamma", json_number(kExpMinusGamma)},
          {"pi2_over_12", json_number(kPiSquaredOver12)}}},
        {"margins", margins},
        {"tails", tails},
        {"conditions_cited", c.conditions_cited},
    };
    if (c.drift.delta_quadrature) {
        out["delta_quadrature"] = json_number(*c.drift.delta_quadrature);
        out["quadrature_error_estimate"] = json_number(c.drift.quadrature_error_estimate);
    }
    if (!c.note.empty()) out["note"] = c.note;
    return out;
}

// ---------------------------------------------------------------------------

MomentProduct stationary_moment_frechet_stable(double alpha, double beta, double s) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("stationary moment: alpha must lie in (0,1)");
    if (!(beta > 1.0) || !std::isfinite(beta)) throw DomainError("stationary moment: beta must be > 1");
    if (!(s > 0.0 && s < alpha * beta)) {
        throw DomainError("stationary moment: s must lie in (0, alpha*beta); the moment does not exist");
    }
    MomentProduct m;
    double scale = alpha * beta;  // α β^n
    double last = 0.0;
    for (std::size_t n = 1; n < 100000; ++n) {
        last = std::lgamma(1.0 - s / scale);
        m.log_value += last;
        m.terms = n;
        if (std::abs(last) < 1e-14) break;
        scale *= beta;
    }
    // ln Γ(1-ε) ≈ γε and ε shrinks by 1/β per term: geometric tail, doubled for slack.
    m.remainder_bound = 2.0 * std::abs(last) / (beta - 1.0);
    m.value = std::exp(m.log_value);
    return m;
}

SeriesCheckReport delta_infinite_series_check(double beta, const EnvironmentLaw& env,
                                              std::size_t n_paths, std::uint64_t seed,
                                              const SeriesCheckOptions& options) {
    if (!(beta > 1.0)) throw DomainError("series check: beta must be > 1");
    SeriesCheckReport r;
    r.beta = beta;
    r.n_paths = n_paths;
    r.options = options;

    std::vector<RngStream> streams;
    streams.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) streams.emplace_back(derive_seed(seed, i));

    std::vector<double> sums(n_paths, 0.0), late_max(n_paths, 0.0), eta(n_paths);
    double weight = 1.0;
    for (std::size_t n = 0; n < options.n_terms; ++n) {
        for (std::size_t i = 0; i < n_paths; ++i) eta[i] = sample_eta(env, streams[i]);
        kernels::axpy(weight, eta, sums);
        if (n >= options.check_after) kernels::running_max_abs(weight, eta, late_max);
        weight /= beta;
    }
    std::size_t stable = 0;
    for (double m : late_max) stable += m < options.increment_threshold ? 1 : 0;
    r.fraction_stabilized = n_paths ? static_cast<double>(stable) / static_cast<double>(n_paths) : 0.0;
    r.partial_sums = std::move(sums);

    RngStream tail_rng(derive_seed(mix64(seed ^ 0x7461696cULL), 0));
    std::size_t exceed = 0;
    for (std::size_t i = 0; i < options.tail_samples; ++i) {
        exceed += sample_eta(env, tail_rng) > options.tail_x ? 1 : 0;
    }
    const double n = static_cast<double>(options.tail_samples);
    r.tail_probability = static_cast<double>(exceed) / n;
    r.tail_scaled = r.tail_probability * options.tail_x;
    r.tail_scaled_stderr =
        options.tail_x * std::sqrt(r.tail_probability * (1.0 - r.tail_probability) / n);
    return r;
}

double lyapunov_g(double x, double x1, double x2) {
    if (x == 0.0) return kInf;
    return std::max(0.0, std::log(x / x2)) + std::max(0.0, std::log(x1 / x));
}

std::vector<DriftPoint> drift_probe(const OffspringLaw& law, const EnvironmentLaw& env,
                                    const std::vector<double>& grid, double x1, double x2,
                                    std::size_t n_samples, std::uint64_t seed) {
    if (!(x1 > 0.0 && x1 <= x2)) throw DomainError("drift_probe: need 0 < x1 <= x2");
    std::vector<DriftPoint> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid[k];
        RngStream rng(derive_seed(seed, k));
        std::vector<double> d(n_samples);
        for (auto& v : d) {
            const double next = step_mbpplre(x, rng.uniform(), law, env);
            v = lyapunov_g(next, x1, x2);
        }
        const auto s = kernels::sum_and_squares(d);
        const double n = static_cast<double>(n_samples);
        const double mean = s.sum / n;
        const double var = std::max(0.0, (s.sum_sq - n * mean * mean) / (n - 1.0));
        out.push_back({x, mean - lyapunov_g(x, x1, x2), std::sqrt(var / n)});
    }
    return out;
}

} // namespace mbp
