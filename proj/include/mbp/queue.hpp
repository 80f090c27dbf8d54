#pragma once

// Gated infinite-server queue: all waiting customers enter service together when
// the gate opens, and the gate reopens when the last of them finishes. Stage
// durations over a busy period form an MBP with F(x) = exp{-λ B̄(x)}.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "mbp/analysis.hpp"
#include "mbp/couplings.hpp"
#include "mbp/distributions.hpp"
#include "mbp/rng.hpp"

namespace mbp {

enum class QueueMode { ContinuousTime, DiscreteTimeUnitArrivals };

const char* queue_mode_name(QueueMode m) noexcept;

struct GatedQueueConfig {
    double arrival_rate = 1.0;
    ServiceLaw service = ServiceLaw::exponential(1.0);
    QueueMode mode = QueueMode::ContinuousTime;

    // Throws ConfigError (rate <= 0, discrete mode with non-integer service).
    void validate() const;
};

struct StageRecord {
    std::size_t stage_index = 0;
    double gate_open_time = 0.0;
    std::uint64_t batch_size = 0;
    double stage_duration = 0.0;
    // Time the gate waited on an empty queue before this stage; 0 in discrete mode.
    double idle_wait = 0.0;
    // This stage opened a busy period (first stage, or after an empty gate).
    bool busy_period_start = false;
};

OffspringLaw induced_offspring_law(double lambda, const ServiceLaw& service);

// Poisson(mean) by counting exponential interarrival times within [0, mean].
std::uint64_t poisson_count(double mean, RngStream& rng);

// Stage 0 starts at time 0 with one customer. Each later stage admits the
// arrivals during the previous stage (Poisson(λ Z) or exactly Z); an empty batch
// makes the gate wait for the next customer, who opens a new busy period.
std::vector<StageRecord> simulate_gated_queue(const GatedQueueConfig& config, std::size_t n_stages,
                                              std::uint64_t seed);

struct QueueStep {
    std::uint64_t batch_size = 0;
    double duration = 0.0;
};

// Event-driven single stage after a stage of duration x (no empty-gate wait).
QueueStep queue_one_step(const GatedQueueConfig& config, double x, RngStream& rng);

// Same stage drawn from a single uniform through F^x: identical to the MBP kernel.
double queue_step_from_uniform(const GatedQueueConfig& config, double x, double u);

struct KernelCell {
    double x = 0.0;
    double y = 0.0;
    double empirical = 0.0;
    double expected = 0.0;
    double std_error = 0.0;
    bool pass = true;
};

struct KernelCheckReport {
    std::size_t n_per_x = 0;
    std::vector<KernelCell> cells;
    bool all_pass = true;
};

// Empirical P(Z' <= y | Z = x) from queue_one_step vs exp{-λ x B̄(y)}, 4 binomial std-errors.
KernelCheckReport queue_kernel_check(const GatedQueueConfig& config, const std::vector<double>& xs,
                                     const std::vector<double>& ys, std::size_t n_per_x,
                                     std::uint64_t seed);

struct PoissonBatchReport {
    double x = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double ratio = 0.0;
    double ratio_std_error = 0.0;
    bool pass = true;
};

// Batch sizes after a stage of duration x: variance/mean within 4 std-errors of 1.
PoissonBatchReport poisson_batch_check(const GatedQueueConfig& config, double x, std::size_t n,
                                       std::uint64_t seed);

struct EquivalenceReport {
    std::size_t busy_periods = 0;
    std::size_t n_queue = 0;
    std::size_t n_mbp = 0;
    KsResult ks;
    double critical_value = 0.0;
    bool pass = false;
};

// Pools the stage durations of complete busy periods from the queue simulator
// (seed_a) and the nonzero states of the same number of induced-MBP paths from
// Z0 ~ B (seed_b), then compares them with a two-sample KS test at level alpha.
EquivalenceReport queue_vs_mbp_equivalence(const GatedQueueConfig& config, std::size_t n_stages,
                                           std::uint64_t seed_a, std::uint64_t seed_b,
                                           double alpha = 0.01);

struct QueueSummary {
    std::size_t n_stages = 0;
    double mean_stage_duration = 0.0;
    double mean_stage_duration_se = 0.0;
    double mean_batch_size = 0.0;
    double mean_batch_size_se = 0.0;
    // Idle time over total elapsed time.
    double idle_fraction = 0.0;
    std::size_t idle_events = 0;
    double q50 = 0.0, q90 = 0.0, q99 = 0.0;
    // Mean stage duration over the first and second half of the stages.
    double half_means[2] = {0.0, 0.0};
    double half_means_se[2] = {0.0, 0.0};
    bool halves_agree = true;
    Verdict induced_verdict = Verdict::Indeterminate;
    // Empty-gate idles recur throughout the run (both halves have idle events).
    bool recurring_idle = false;
};

QueueSummary summarize_queue(const GatedQueueConfig& config, const std::vector<StageRecord>& stages);
QueueSummary queue_performance_report(const GatedQueueConfig& config, std::size_t n_stages,
                                      std::uint64_t seed);

void write_stage_csv(std::ostream& os, const std::vector<StageRecord>& stages);
nlohmann::json to_json(const QueueSummary& s);
nlohmann::json to_json(const KernelCheckReport& r);
nlohmann::json to_json(const EquivalenceReport& r);

} // namespace mbp
