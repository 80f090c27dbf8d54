#include "mbp/queue.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "mbp/error.hpp"
#include "mbp/process.hpp"
#include "mbp/report.hpp"

namespace mbp {

namespace {

// Above this batch size the maximum service time is drawn from B^k directly.
constexpr std::uint64_t kDirectBatchMax = 1'000'000;
// Above this mean the Poisson count comes from the standard library sampler.
constexpr double kCountingMeanMax = 1e4;

double max_service(const ServiceLaw& b, std::uint64_t k, RngStream& rng) {
    if (k == 0) return 0.0;
    if (k > kDirectBatchMax) {
        // P(max <= y) = B(y)^k, so max = B^{-1}(U^{1/k}).
        const double survival = -std::expm1(std::log(rng.uniform()) / static_cast<double>(k));
        return b.quantile_from_survival(survival);
    }
    double m = 0.0;
    for (std::uint64_t i = 0; i < k; ++i) m = std::max(m, b.sample(rng));
    return m;
}

std::uint64_t arrivals_during(const GatedQueueConfig& c, double duration, RngStream& rng) {
    if (c.mode == QueueMode::DiscreteTimeUnitArrivals) return static_cast<std::uint64_t>(duration);
    return poisson_count(c.arrival_rate * duration, rng);
}

// Law of one stage duration given the previous one, as an MBP offspring law.
OffspringLaw stage_law(const GatedQueueConfig& c) {
    if (c.mode == QueueMode::ContinuousTime) return induced_offspring_law(c.arrival_rate, c.service);
    const auto& fam = c.service.family();
    if (const auto* d = std::get_if<service::Deterministic>(&fam)) return OffspringLaw::empirical({d->value}, {1.0});
    const auto& e = std::get<service::Empirical>(fam);
    return OffspringLaw::empirical(e.values, e.cdf);
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Mean with a batch-means standard error (20 contiguous batches), robust to
// the serial correlation of consecutive stages.
MeanSe batch_mean(const std::vector<double>& x) {
    MeanSe r;
    if (x.empty()) return r;
    const double n = static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += v;
    r.mean = s / n;
    const std::size_t batches = std::min<std::size_t>(20, x.size());
    if (batches < 2) return r;
    std::vector<double> sums(batches, 0.0);
    std::vector<std::size_t> counts(batches, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t b = i * batches / x.size();
        sums[b] += x[i];
        ++counts[b];
    }
    double ss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        const double m = sums[b] / static_cast<double>(counts[b]);
        ss += (m - r.mean) * (m - r.mean);
    }
    const double B = static_cast<double>(batches);
    r.se = std::sqrt(ss / (B - 1.0) / B);
    return r;
}

double quantile_sorted(const std::vector<double>& s, double p) {
    if (s.empty()) return 0.0;
    return s[static_cast<std::size_t>(p * static_cast<double>(s.size() - 1))];
}

} // namespace

const char* queue_mode_name(QueueMode m) noexcept {
    return m == QueueMode::ContinuousTime ? "continuous" : "discrete";
}

void GatedQueueConfig::validate() const {
    if (!(arrival_rate > 0.0 && std::isfinite(arrival_rate))) {
        throw ConfigError("arrival_rate must be > 0");
    }
    if (mode == QueueMode::DiscreteTimeUnitArrivals && !service.is_integer()) {
        throw ConfigError("service: discrete mode needs integer-valued service times "
                          "(deterministic integer or empirical on the integers)");
    }
}

OffspringLaw induced_offspring_law(double lambda, const ServiceLaw& service) {
    return OffspringLaw::queue_induced(lambda, service);
}

std::uint64_t poisson_count(double mean, RngStream& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson_count: mean must be finite and >= 0");
    if (mean > kCountingMeanMax) {
        std::poisson_distribution<std::uint64_t> d(mean);
        return d(rng.engine());
    }
    std::uint64_t n = 0;
    double t = rng.exponential();
    while (t <= mean) {
        ++n;
        t += rng.exponential();
    }
    return n;
}

std::vector<StageRecord> simulate_gated_queue(const GatedQueueConfig& config, std::size_t n_stages,
                                              std::uint64_t seed) {
    config.validate();
    if (n_stages == 0) throw DomainError("simulate_gated_queue: n_stages must be >= 1");
    RngStream rng(seed);
    std::vector<StageRecord> out;
    out.reserve(n_stages);
    double clock = 0.0;
    std::uint64_t batch = 1;
    double idle = 0.0;
    bool start = true;
    for (std::size_t n = 0; n < n_stages; ++n) {
        StageRecord r;
        r.stage_index = n;
        clock += idle;
        r.gate_open_time = clock;
        r.batch_size = batch;
        r.idle_wait = idle;
        r.busy_period_start = start;
        r.stage_duration = max_service(config.service, batch, rng);
        clock += r.stage_duration;
        out.push_back(r);

        batch = arrivals_during(config, r.stage_duration, rng);
        idle = 0.0;
        start = false;
        if (batch == 0) {
            // Empty gate: wait for the next customer, who opens the next stage alone.
            if (config.mode == QueueMode::ContinuousTime) idle = rng.exponential() / config.arrival_rate;
            batch = 1;
            start = true;
        }
    }
    return out;
}

QueueStep queue_one_step(const GatedQueueConfig& config, double x, RngStream& rng) {
    QueueStep s;
    s.batch_size = arrivals_during(config, x, rng);
    s.duration = max_service(config.service, s.batch_size, rng);
    return s;
}

double queue_step_from_uniform(const GatedQueueConfig& config, double x, double u) {
    if (x == 0.0) return 0.0;
    return step_mbp_continuous(x, u, stage_law(config));
}

KernelCheckReport queue_kernel_check(const GatedQueueConfig& config, const std::vector<double>& xs,
                                     const std::vector<double>& ys, std::size_t n_per_x,
                                     std::uint64_t seed) {
    config.validate();
    const auto law = stage_law(config);
    KernelCheckReport r;
    r.n_per_x = n_per_x;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        RngStream rng(derive_seed(seed, i));
        std::vector<double> d(n_per_x);
        for (auto& v : d) v = queue_one_step(config, xs[i], rng).duration;
        for (double y : ys) {
            KernelCell c;
            c.x = xs[i];
            c.y = y;
            c.empirical = static_cast<double>(std::count_if(d.begin(), d.end(), [y](double v) { return v <= y; })) /
                          static_cast<double>(n_per_x);
            c.expected = std::pow(law.cdf(y), xs[i]);
            c.std_error = std::sqrt(c.expected * (1.0 - c.expected) / static_cast<double>(n_per_x));
            c.pass = std::abs(c.empirical - c.expected) <= 4.0 * c.std_error + 1e-12;
            r.all_pass = r.all_pass && c.pass;
            r.cells.push_back(c);
        }
    }
    return r;
}

PoissonBatchReport poisson_batch_check(const GatedQueueConfig& config, double x, std::size_t n,
                                       std::uint64_t seed) {
    if (n < 2) throw DomainError("poisson_batch_check: need n >= 2");
    RngStream rng(seed);
    const double mean_true = config.arrival_rate * x;
    std::vector<double> k(n);
    for (auto& v : k) v = static_cast<double>(arrivals_during(config, x, rng));
    PoissonBatchReport r;
    r.x = x;
    const double nn = static_cast<double>(n);
    for (double v : k) r.mean += v;
    r.mean /= nn;
    for (double v : k) r.variance += (v - r.mean) * (v - r.mean);
    r.variance /= nn - 1.0;
    r.ratio = r.mean > 0.0 ? r.variance / r.mean : 0.0;
    // Var of the sample variance for Poisson(μ): (μ + 2μ²)/n; the mean's error is second order.
    r.ratio_std_error = mean_true > 0.0 ? std::sqrt((mean_true + 2.0 * mean_true * mean_true) / nn) / mean_true : 0.0;
    r.pass = std::abs(r.ratio - 1.0) <= 4.0 * r.ratio_std_error;
    return r;
}

EquivalenceReport queue_vs_mbp_equivalence(const GatedQueueConfig& config, std::size_t n_stages,
                                           std::uint64_t seed_a, std::uint64_t seed_b, double alpha) {
    if (config.mode != QueueMode::ContinuousTime) {
        throw PreconditionError("queue_vs_mbp_equivalence: continuous mode only");
    }
    const auto stages = simulate_gated_queue(config, n_stages, seed_a);
    EquivalenceReport r;
    std::vector<double> queue_durations;
    std::vector<double> current;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].busy_period_start && i > 0) {
            // The previous busy period ended with an empty gate: it is complete.
            queue_durations.insert(queue_durations.end(), current.begin(), current.end());
            current.clear();
            ++r.busy_periods;
        }
        current.push_back(stages[i].stage_duration);
    }

    const auto law = induced_offspring_law(config.arrival_rate, config.service);
    std::vector<double> mbp_states;
    for (std::size_t p = 0; p < r.busy_periods; ++p) {
        RngStream rng(derive_seed(seed_b, p));
        double z = config.service.sample(rng);
        for (std::size_t n = 0; n < n_stages && z > 0.0; ++n) {
            mbp_states.push_back(z);
            z = step_mbp_continuous(z, rng.uniform(), law);
        }
    }
    r.n_queue = queue_durations.size();
    r.n_mbp = mbp_states.size();
    if (r.n_queue == 0 || r.n_mbp == 0) {
        throw NumericError("queue_vs_mbp_equivalence: no complete busy period within " +
                           std::to_string(n_stages) + " stages");
    }
    r.ks = ks_two_sample(std::move(queue_durations), std::move(mbp_states));
    r.critical_value = ks_critical_value(alpha, r.n_queue, r.n_mbp);
    r.pass = r.ks.statistic < r.critical_value;
    return r;
}

QueueSummary summarize_queue(const GatedQueueConfig& config, const std::vector<StageRecord>& stages) {
    QueueSummary s;
    s.n_stages = stages.size();
    std::vector<double> d, b;
    double idle_total = 0.0, busy_total = 0.0;
    const std::size_t half = stages.size() / 2;
    std::size_t idle_first = 0, idle_second = 0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& r = stages[i];
        d.push_back(r.stage_duration);
        b.push_back(static_cast<double>(r.batch_size));
        idle_total += r.idle_wait;
        busy_total += r.stage_duration;
        if (r.busy_period_start && i > 0) {
            ++s.idle_events;
            (i < half ? idle_first : idle_second) += 1;
        }
    }
    const auto md = batch_mean(d), mb = batch_mean(b);
    s.mean_stage_duration = md.mean;
    s.mean_stage_duration_se = md.se;
    s.mean_batch_size = mb.mean;
    s.mean_batch_size_se = mb.se;
    s.idle_fraction = idle_total + busy_total > 0.0 ? idle_total / (idle_total + busy_total) : 0.0;
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    s.q50 = quantile_sorted(sorted, 0.5);
    s.q90 = quantile_sorted(sorted, 0.9);
    s.q99 = quantile_sorted(sorted, 0.99);
    const auto h1 = batch_mean(std::vector<double>(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(half)));
    const auto h2 = batch_mean(std::vector<double>(d.begin() + static_cast<std::ptrdiff_t>(half), d.end()));
    s.half_means[0] = h1.mean;
    s.half_means[1] = h2.mean;
    s.half_means_se[0] = h1.se;
    s.half_means_se[1] = h2.se;
    s.halves_agree = std::abs(h1.mean - h2.mean) <= 4.0 * std::hypot(h1.se, h2.se) + 1e-12;
    s.recurring_idle = idle_first > 0 && idle_second > 0;
    if (config.mode == QueueMode::ContinuousTime) {
        s.induced_verdict = classify(induced_offspring_law(config.arrival_rate, config.service),
                                     EnvironmentLaw::degenerate(1.0)).verdict;
    } else {
        s.induced_verdict = classify(stage_law(config), EnvironmentLaw::degenerate(1.0)).verdict;
    }
    return s;
}

QueueSummary queue_performance_report(const GatedQueueConfig& config, std::size_t n_stages,
                                      std::uint64_t seed) {
    return summarize_queue(config, simulate_gated_queue(config, n_stages, seed));
}

void write_stage_csv(std::ostream& os, const std::vector<StageRecord>& stages) {
    os << "stage_index,gate_open_time,batch_size,stage_duration,idle_wait\n";
    for (const auto& r : stages) {
        os << r.stage_index << ',' << format_number(r.gate_open_time) << ',' << r.batch_size << ','
           << format_number(r.stage_duration) << ',' << format_number(r.idle_wait) << '\n';
    }
}

nlohmann::json to_json(const QueueSummary& s) {
    return {{"n_stages", s.n_stages},
            {"mean_stage_duration", json_number(s.mean_stage_duration)},
            {"mean_stage_duration_se", json_number(s.mean_stage_duration_se)},
            {"mean_batch_size", json_number(s.mean_batch_size)},
            {"mean_batch_size_se", json_number(s.mean_batch_size_se)},
            {"idle_fraction", json_number(s.idle_fraction)},
            {"idle_events", s.idle_events},
            {"recurring_idle", s.recurring_idle},
            {"stage_duration_quantiles",
             {{"0.5", json_number(s.q50)}, {"0.9", json_number(s.q90)}, {"0.99", json_number(s.q99)}}},
            {"half_means", {json_number(s.half_means[0]), json_number(s.half_means[1])}},
            {"half_means_se", {json_number(s.half_means_se[0]), json_number(s.half_means_se[1])}},
            {"halves_agree", s.halves_agree},
            {"induced_verdict", verdict_name(s.induced_verdict)}};
}

nlohmann::json to_json(const KernelCheckReport& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"x", json_number(c.x)}, {"y", json_number(c.y)},
                         {"empirical", json_number(c.empirical)}, {"expected", json_number(c.expected)},
                         {"std_error", json_number(c.std_error)}, {"pass", c.pass}});
    }
    return {{"n_per_x", r.n_per_x}, {"all_pass", r.all_pass}, {"cells", cells}};
}

nlohmann::json to_json(const EquivalenceReport& r) {
    return {{"busy_periods", r.busy_periods}, {"n_queue", r.n_queue}, {"n_mbp", r.n_mbp},
            {"ks", to_json(r.ks)}, {"critical_value", json_number(r.critical_value)}, {"pass", r.pass}};
}

} // namespace mbp
