#include "mbp/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mbp/constants.hpp"
#include "mbp/error.hpp"
#include "mbp/kernels.hpp"
#include "mbp/report.hpp"

namespace mbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOrderSlack = 1e-12;

// Kolmogorov survival function Q(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²).
double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Dual series, fast for small λ: 1 - sqrt(2π)/λ Σ exp(-(2k-1)² π² / (8λ²)).
        double s = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double t = (2.0 * k - 1.0) * kPi / lambda;
            s += std::exp(-t * t / 8.0);
        }
        return std::clamp(1.0 - std::sqrt(2.0 * kPi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

double clamp_absorbed(double z, bool& numeric) {
    if (z > 0.0 && z < kAbsorptionFloor) {
        numeric = true;
        return 0.0;
    }
    return z;
}

double initial_from_uniform(const std::variant<double, OffspringLaw>& init, double u0) {
    if (const auto* z0 = std::get_if<double>(&init)) return *z0;
    return std::get<OffspringLaw>(init).quantile(u0);
}

OrderCertificate grid_offspring_order(const OffspringLaw& low, const OffspringLaw& high) {
    // 10³ points: 500 quantile levels of each law, so the grid spans both supports.
    std::vector<double> grid;
    grid.reserve(1000);
    for (int k = 0; k < 500; ++k) {
        const double u = (k + 0.5) / 500.0;
        grid.push_back(low.quantile(u));
        grid.push_back(high.quantile(u));
    }
    OrderCertificate c;
    c.worst_gap = kInf;
    for (double x : grid) {
        if (!std::isfinite(x)) continue;
        c.worst_gap = std::min(c.worst_gap, low.cdf(x) - high.cdf(x));
    }
    c.holds = c.worst_gap >= -kOrderSlack;
    c.detail = "grid of 1000 points spanning both supports";
    return c;
}

OrderCertificate analytic(bool holds, std::string detail) {
    OrderCertificate c;
    c.holds = holds;
    c.analytic = true;
    c.worst_gap = holds ? kInf : -kInf;
    c.detail = std::move(detail);
    return c;
}

std::vector<double> sorted_copy(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

double ecdf_sorted(const std::vector<double>& sorted, double x) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

void check_gate(const ProcessSpec& spec, bool override_gate, Verdict& verdict) {
    verdict = classify(spec).verdict;
    if (verdict != Verdict::Ergodic && !override_gate) {
        throw PreconditionError(std::string("stationary estimation needs an Ergodic spec, classifier says ") +
                                verdict_name(verdict) + " (set override to force)");
    }
}

} // namespace

// ---- Kolmogorov-Smirnov ------------------------------------------------------

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: samples must be nonempty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    KsResult r;
    r.statistic = d;
    r.n_a = a.size();
    r.n_b = b.size();
    const double ne = std::sqrt(na * nb / (na + nb));
    r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

double ks_critical_value(double alpha, std::size_t n_a, std::size_t n_b) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ks_critical_value: alpha must lie in (0,1)");
    if (n_a == 0 || n_b == 0) throw DomainError("ks_critical_value: sample sizes must be > 0");
    const double na = static_cast<double>(n_a), nb = static_cast<double>(n_b);
    return std::sqrt(-std::log(alpha / 2.0) / 2.0) * std::sqrt((na + nb) / (na * nb));
}

// ---- stochastic-order certificates ---------------------------------------------

OrderCertificate certify_offspring_order(const OffspringLaw& low, const OffspringLaw& high) {
    const auto fl = low.as_frechet(), fh = high.as_frechet();
    if (fl && fh && fl->beta == fh->beta) {
        return analytic(fl->c <= fh->c, "frechet with equal beta ordered by c");
    }
    return grid_offspring_order(low, high);
}

OrderCertificate certify_environment_order(const EnvironmentLaw& low, const EnvironmentLaw& high) {
    const auto& a = low.family();
    const auto& b = high.family();
    if (const auto* x = std::get_if<environment::Degenerate>(&a)) {
        if (const auto* y = std::get_if<environment::Degenerate>(&b)) {
            return analytic(x->a <= y->a, "point masses ordered by location");
        }
    }
    if (const auto* x = std::get_if<environment::Exponential>(&a)) {
        if (const auto* y = std::get_if<environment::Exponential>(&b)) {
            return analytic(x->theta <= y->theta, "exponential laws ordered by mean");
        }
    }
    if (const auto* x = std::get_if<environment::StrictlyStable>(&a)) {
        if (const auto* y = std::get_if<environment::StrictlyStable>(&b)) {
            if (x->alpha == y->alpha) return analytic(x->c <= y->c, "stable laws with equal alpha ordered by c");
        }
    }
    if (std::holds_alternative<environment::HeavyLogTail>(a) &&
        std::holds_alternative<environment::HeavyLogTail>(b)) {
        return analytic(true, "identical laws");
    }
    OrderCertificate c;
    c.worst_gap = kInf;
    for (int k = 0; k < 1000; ++k) {
        const double w = std::log(10.0) * (-6.0 + 12.0 * k / 999.0);
        c.worst_gap = std::min(c.worst_gap, low.lst_at_log_arg(w) - high.lst_at_log_arg(w));
    }
    c.holds = c.worst_gap >= -kOrderSlack;
    c.detail = "lst compared on 1000 log-spaced points in [1e-6, 1e6]";
    return c;
}

OrderCertificate certify_initial_order(const std::variant<double, OffspringLaw>& low,
                                       const std::variant<double, OffspringLaw>& high) {
    const auto* zl = std::get_if<double>(&low);
    const auto* zh = std::get_if<double>(&high);
    if (zl && zh) return analytic(*zl <= *zh, "point masses ordered by location");
    if (zl) {
        // δ_z ≺ H iff H puts no mass below z.
        const auto& h = std::get<OffspringLaw>(high);
        const bool ok = *zl == 0.0 || h.cdf(std::nextafter(*zl, 0.0)) == 0.0;
        return analytic(ok, "point mass below the initial law");
    }
    if (zh) {
        // H ≺ δ_z iff H(z) = 1.
        const auto& h = std::get<OffspringLaw>(low);
        return analytic(h.cdf(*zh) == 1.0, "initial law below the point mass");
    }
    return certify_offspring_order(std::get<OffspringLaw>(low), std::get<OffspringLaw>(high));
}

// ---- couplings ----------------------------------------------------------------

CoupledPair coupled_paths(const ProcessSpec& low, const ProcessSpec& high, std::size_t n_steps,
                          std::uint64_t seed) {
    if (low.variant == Variant::MbpreInteger || high.variant == Variant::MbpreInteger) {
        throw PreconditionError("coupling needs one uniform per step; mbpre_integer uses several");
    }
    CoupledPair pair;
    pair.spec_low = low;
    pair.spec_high = high;
    pair.shared_seed = seed;
    pair.low.seed = pair.high.seed = seed;
    pair.low.states.reserve(n_steps + 1);
    pair.high.states.reserve(n_steps + 1);

    RngStream rng(seed);
    const double u0 = rng.uniform();
    double a = initial_from_uniform(low.initial, u0);
    double b = initial_from_uniform(high.initial, u0);
    pair.low.states.push_back(a);
    pair.high.states.push_back(b);
    if (a == 0.0) pair.low.absorbed_at = 0;
    if (b == 0.0) pair.high.absorbed_at = 0;
    for (std::size_t n = 1; n <= n_steps; ++n) {
        const double u = rng.uniform();
        a = clamp_absorbed(step_shared(low, a, u), pair.low.numeric_absorption);
        b = clamp_absorbed(step_shared(high, b, u), pair.high.numeric_absorption);
        if (a == 0.0 && !pair.low.absorbed_at) pair.low.absorbed_at = n;
        if (b == 0.0 && !pair.high.absorbed_at) pair.high.absorbed_at = n;
        pair.low.states.push_back(a);
        pair.high.states.push_back(b);
    }
    pair.steps_compared = n_steps + 1;
    const std::size_t violations = kernels::count_greater(pair.low.states, pair.high.states);
    if (violations != 0) {
        std::size_t first = 0;
        while (!(pair.low.states[first] > pair.high.states[first])) ++first;
        throw InvariantError("coupling violated: low path exceeds high path at step " +
                             std::to_string(first) + " (" + std::to_string(violations) +
                             " violations, seed " + std::to_string(seed) + ")");
    }
    return pair;
}

CoupledPair coupled_monotone_paths(const ProcessSpec& spec, double z0_low, double z0_high,
                                   std::size_t n_steps, std::uint64_t seed) {
    if (!(z0_low <= z0_high)) throw PreconditionError("coupled_monotone_paths: need z0_low <= z0_high");
    ProcessSpec low = spec, high = spec;
    low.initial = z0_low;
    high.initial = z0_high;
    return coupled_paths(low, high, n_steps, seed);
}

CoupledPair coupled_parameter_paths(const ProcessSpec& low, const ProcessSpec& high,
                                    std::size_t n_steps, std::uint64_t seed) {
    const auto f = certify_offspring_order(low.offspring, high.offspring);
    if (!f.holds) throw PreconditionError("offspring laws are not ordered (worst gap " +
                                          format_number(f.worst_gap) + ", " + f.detail + ")");
    const auto g = certify_environment_order(low.environment, high.environment);
    if (!g.holds) throw PreconditionError("environment laws are not ordered (worst gap " +
                                          format_number(g.worst_gap) + ", " + g.detail + ")");
    const auto h = certify_initial_order(low.initial, high.initial);
    if (!h.holds) throw PreconditionError("initial laws are not ordered (" + h.detail + ")");
    return coupled_paths(low, high, n_steps, seed);
}

// ---- scaling transport -------------------------------------------------------------

ProcessSpec transport_spec(const ProcessSpec& spec, double lambda) {
    if (!(lambda > 0.0 && std::isfinite(lambda))) throw DomainError("transport: lambda must be > 0");
    if (!spec.single_uniform() && spec.variant != Variant::MbpInteger) {
        throw PreconditionError("transport: mbpre_integer is not supported");
    }
    const auto* z0 = std::get_if<double>(&spec.initial);
    if (!z0) throw PreconditionError("transport: needs a fixed initial state");
    ProcessSpec out = spec;
    if (out.variant == Variant::MbpInteger) out.variant = Variant::MbpContinuous;
    out.offspring = OffspringLaw::scaled(spec.offspring, lambda);
    out.initial = lambda * *z0;
    return out;
}

TransportReport scaling_transport(const ProcessSpec& spec, double lambda, std::size_t n_cases,
                                  std::uint64_t seed) {
    TransportReport r;
    r.lambda = lambda;
    r.n_cases = n_cases;
    const ProcessSpec t = transport_spec(spec, lambda);
    RngStream rng(seed);
    for (std::size_t i = 0; i < n_cases; ++i) {
        const double z = std::exp(10.0 * rng.uniform() - 5.0);
        const double u = rng.uniform();
        const double a = lambda * step_shared(spec, z, u);
        const double b = step_shared(t, lambda * z, u);
        if (a == b) continue;
        r.max_relative_diff = std::max(r.max_relative_diff, std::abs(a - b) / std::abs(a));
    }
    if (const auto fr = spec.offspring.as_frechet()) {
        const offspring::Frechet mapped{fr->c * std::pow(lambda, 1.0 - 1.0 / fr->beta), fr->beta};
        r.closed_form = mapped;
        const auto closed = OffspringLaw::frechet(mapped.c, mapped.beta);
        for (int k = 1; k < 200; ++k) {
            const double x = closed.quantile(k / 200.0);
            r.closed_form_max_diff = std::max(r.closed_form_max_diff, std::abs(closed.cdf(x) - t.offspring.cdf(x)));
        }
    }
    return r;
}

// ---- association ---------------------------------------------------------------

CovarianceEstimate sample_covariance(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("sample_covariance: need two equal samples of size >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = (x[i] - mx) * (y[i] - my);
        s += d;
        s2 += d * d;
    }
    CovarianceEstimate c;
    c.covariance = s / (n - 1.0);
    const double mean_d = s / n;
    c.std_error = std::sqrt(std::max(0.0, s2 / n - mean_d * mean_d) / n);
    return c;
}

AssociationReport association_test(const ProcessSpec& spec, const std::vector<std::size_t>& indices,
                                   std::size_t n_samples, std::uint64_t seed, unsigned threads) {
    if (indices.empty()) throw DomainError("association_test: need at least one index");
    const std::size_t horizon = *std::max_element(indices.begin(), indices.end());
    const std::size_t m = indices.size();
    std::vector<std::vector<double>> coords(m, std::vector<double>(n_samples));
    parallel_for(n_samples, threads, [&](std::size_t i) {
        const auto t = simulate(spec, horizon, derive_seed(seed, i));
        for (std::size_t k = 0; k < m; ++k) coords[k][i] = t.states[indices[k]];
    });

    struct Fn {
        std::string name;
        std::vector<double> values;
    };
    std::vector<Fn> bank;
    for (std::size_t k = 0; k < m; ++k) {
        const std::string z = "Z" + std::to_string(indices[k]);
        auto sorted = sorted_copy(coords[k]);
        const double median = sorted[sorted.size() / 2];
        Fn proj{z, coords[k]}, at{"atan(" + z + ")", {}}, ind{"1{" + z + ">median}", {}};
        for (double v : coords[k]) {
            at.values.push_back(std::atan(v));
            ind.values.push_back(v > median ? 1.0 : 0.0);
        }
        bank.push_back(std::move(proj));
        bank.push_back(std::move(at));
        bank.push_back(std::move(ind));
    }
    if (m > 1) {
        Fn sum{"sum", std::vector<double>(n_samples, 0.0)}, mx{"max", std::vector<double>(n_samples, 0.0)};
        for (std::size_t i = 0; i < n_samples; ++i) {
            for (std::size_t k = 0; k < m; ++k) {
                sum.values[i] += coords[k][i];
                mx.values[i] = std::max(mx.values[i], coords[k][i]);
            }
        }
        bank.push_back(std::move(sum));
        bank.push_back(std::move(mx));
    }

    AssociationReport r;
    r.indices = indices;
    r.n_samples = n_samples;
    for (std::size_t a = 0; a < bank.size(); ++a) {
        for (std::size_t b = a; b < bank.size(); ++b) {
            const auto c = sample_covariance(bank[a].values, bank[b].values);
            AssociationEntry e{bank[a].name, bank[b].name, c.covariance, c.std_error, true};
            e.pass = std::isnan(c.covariance) || c.covariance >= -4.0 * c.std_error;
            r.all_pass = r.all_pass && e.pass;
            r.entries.push_back(std::move(e));
        }
    }
    return r;
}

// ---- stationary law --------------------------------------------------------------

double StationaryEstimate::ecdf(double x) const { return ecdf_sorted(sorted_samples, x); }

std::vector<double> stationary_samples(const ProcessSpec& spec, std::size_t burn_in, std::size_t n,
                                       std::uint64_t seed, unsigned threads) {
    std::vector<double> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        out[i] = simulate(spec, burn_in, derive_seed(seed, i)).states.back();
    });
    return out;
}

StationaryEstimate estimate_stationary(const ProcessSpec& spec, const StationaryOptions& options) {
    if (options.n_samples < 2) throw DomainError("estimate_stationary: need at least 2 samples");
    StationaryEstimate e;
    check_gate(spec, options.override_gate, e.gate_verdict);
    e.gate_overridden = e.gate_verdict != Verdict::Ergodic;
    e.burn_in = options.burn_in;
    e.n_samples = options.n_samples;

    const auto samples =
        stationary_samples(spec, options.burn_in, options.n_samples, options.seed, options.threads);

    const std::size_t groups = std::clamp<std::size_t>(options.jackknife_groups, 2, options.n_samples);
    for (double s : options.moment_orders) {
        std::vector<double> powered(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) powered[i] = std::pow(samples[i], s);
        // Grouped jackknife: leave out one contiguous block of paths at a time.
        std::vector<double> group_sum(groups, 0.0);
        std::vector<std::size_t> group_n(groups, 0);
        for (std::size_t i = 0; i < powered.size(); ++i) {
            const std::size_t g = i * groups / powered.size();
            group_sum[g] += powered[i];
            ++group_n[g];
        }
        const double total = std::accumulate(group_sum.begin(), group_sum.end(), 0.0);
        const double n = static_cast<double>(powered.size());
        std::vector<double> loo(groups);
        for (std::size_t g = 0; g < groups; ++g) {
            loo[g] = (total - group_sum[g]) / (n - static_cast<double>(group_n[g]));
        }
        const double loo_mean = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(groups);
        double ss = 0.0;
        for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
        const double G = static_cast<double>(groups);
        e.moments.push_back({s, total / n, std::sqrt((G - 1.0) / G * ss)});
    }

    std::vector<double> even, odd;
    for (std::size_t i = 0; i < samples.size(); ++i) (i % 2 == 0 ? even : odd).push_back(samples[i]);
    e.half_ks = ks_two_sample(even, odd);
    e.half_ks_critical = ks_critical_value(options.ks_alpha, even.size(), odd.size());
    e.stabilization_warning = e.half_ks.statistic > e.half_ks_critical;
    e.sorted_samples = sorted_copy(samples);
    return e;
}

OrderCheckReport stationary_order_check(const ProcessSpec& low, const ProcessSpec& high,
                                        const StationaryOptions& options, std::size_t grid_points) {
    Verdict v;
    check_gate(low, options.override_gate, v);
    check_gate(high, options.override_gate, v);
    const auto a = sorted_copy(stationary_samples(low, options.burn_in, options.n_samples, options.seed, options.threads));
    const auto b = sorted_copy(stationary_samples(high, options.burn_in, options.n_samples, options.seed, options.threads));
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());

    OrderCheckReport r;
    r.worst_margin = kInf;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    for (std::size_t k = 0; k < grid_points; ++k) {
        const double level = (k + 0.5) / static_cast<double>(grid_points);
        const double x = pooled[static_cast<std::size_t>(level * static_cast<double>(pooled.size() - 1))];
        const double pa = ecdf_sorted(a, x), pb = ecdf_sorted(b, x);
        const double se = std::max(std::sqrt(pa * (1.0 - pa) / na + pb * (1.0 - pb) / nb), 1.0 / (na + nb));
        r.grid.push_back(x);
        r.cdf_low.push_back(pa);
        r.cdf_high.push_back(pb);
        r.worst_margin = std::min(r.worst_margin, (pa - pb + 4.0 * se) / se);
    }
    r.pass = r.worst_margin >= 0.0;
    return r;
}

// ---- degeneracy -----------------------------------------------------------------

DegeneracyReport degeneracy_experiment(const ProcessSpec& spec, std::size_t n_steps,
                                       std::size_t n_paths, std::uint64_t seed, unsigned threads,
                                       std::vector<std::size_t> steps) {
    if (n_paths == 0) throw DomainError("degeneracy_experiment: need at least one path");
    DegeneracyReport r;
    r.verdict = classify(spec).verdict;
    if (steps.empty()) {
        steps.resize(n_steps + 1);
        std::iota(steps.begin(), steps.end(), std::size_t{0});
    }
    std::vector<std::size_t> absorbed(n_paths, std::numeric_limits<std::size_t>::max());
    parallel_for(n_paths, threads, [&](std::size_t i) {
        const auto t = simulate(spec, n_steps, derive_seed(seed, i));
        if (t.absorbed_at) absorbed[i] = *t.absorbed_at;
    });
    std::sort(absorbed.begin(), absorbed.end());
    for (std::size_t n : steps) {
        const auto count = std::upper_bound(absorbed.begin(), absorbed.end(), n) - absorbed.begin();
        const double frac = static_cast<double>(count) / static_cast<double>(n_paths);
        if (!r.absorbed_fraction.empty() && frac < r.absorbed_fraction.back()) r.nondecreasing = false;
        r.steps.push_back(n);
        r.absorbed_fraction.push_back(frac);
    }
    return r;
}

// ---- JSON -------------------------------------------------------------------------

nlohmann::json to_json(const KsResult& r) {
    return {{"statistic", json_number(r.statistic)}, {"p_value", json_number(r.p_value)},
            {"n_a", r.n_a}, {"n_b", r.n_b}};
}

nlohmann::json to_json(const StationaryEstimate& e) {
    nlohmann::json moments = nlohmann::json::array();
    for (const auto& m : e.moments) {
        moments.push_back({{"s", json_number(m.s)}, {"value", json_number(m.value)},
                           {"std_error", json_number(m.std_error)}});
    }
    const auto q = [&e](double p) {
        const auto& s = e.sorted_samples;
        return json_number(s[static_cast<std::size_t>(p * static_cast<double>(s.size() - 1))]);
    };
    return {{"burn_in", e.burn_in},
            {"n_samples", e.n_samples},
            {"thinning", e.thinning},
            {"gate_verdict", verdict_name(e.gate_verdict)},
            {"gate_overridden", e.gate_overridden},
            {"moments", moments},
            {"quantiles", {{"0.1", q(0.1)}, {"0.5", q(0.5)}, {"0.9", q(0.9)}}},
            {"half_sample_ks", to_json(e.half_ks)},
            {"half_sample_ks_critical", json_number(e.half_ks_critical)},
            {"stabilization_warning", e.stabilization_warning}};
}

nlohmann::json to_json(const OrderCheckReport& r) {
    nlohmann::json grid = nlohmann::json::array();
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        grid.push_back({{"x", json_number(r.grid[i])}, {"cdf_low", json_number(r.cdf_low[i])},
                        {"cdf_high", json_number(r.cdf_high[i])}});
    }
    return {{"pass", r.pass}, {"worst_margin", json_number(r.worst_margin)}, {"grid", grid}};
}

nlohmann::json to_json(const DegeneracyReport& r) {
    nlohmann::json curve = nlohmann::json::array();
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
        curve.push_back({{"n", r.steps[i]}, {"absorbed_fraction", json_number(r.absorbed_fraction[i])}});
    }
    return {{"verdict", verdict_name(r.verdict)}, {"nondecreasing", r.nondecreasing}, {"curve", curve}};
}

nlohmann::json to_json(const AssociationReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"f", e.f}, {"g", e.g}, {"covariance", json_number(e.covariance)},
                           {"std_error", json_number(e.std_error)}, {"pass", e.pass}});
    }
    return {{"indices", r.indices}, {"n_samples", r.n_samples}, {"all_pass", r.all_pass},
            {"entries", entries}};
}

} // namespace mbp
