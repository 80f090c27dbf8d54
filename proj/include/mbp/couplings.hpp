#pragma once

// Shared-uniform couplings, scaling transport, association tests, stationary-law
// estimation with stochastic-order checks, and the two-sample KS utility.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbp/analysis.hpp"
#include "mbp/process.hpp"

namespace mbp {

// ---- Kolmogorov-Smirnov ------------------------------------------------------

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

// Two-sample statistic sup |F_a - F_b| with the asymptotic Kolmogorov p-value.
// Throws DomainError on an empty sample.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
// c(α) sqrt((n_a + n_b)/(n_a n_b)) with c(α) = sqrt(-ln(α/2)/2).
double ks_critical_value(double alpha, std::size_t n_a, std::size_t n_b);

// ---- stochastic-order certificates ---------------------------------------------

// F' ≺ F'' means F'(x) >= F''(x) for all x; for environments φ'(u) >= φ''(u).
struct OrderCertificate {
    bool holds = false;
    bool analytic = false;
    // Smallest F' - F'' (or φ' - φ'') seen on the grid; +inf when decided analytically.
    double worst_gap = 0.0;
    std::string detail;
};

OrderCertificate certify_offspring_order(const OffspringLaw& low, const OffspringLaw& high);
OrderCertificate certify_environment_order(const EnvironmentLaw& low, const EnvironmentLaw& high);
// Initial states: point masses compare directly, laws as offspring laws.
OrderCertificate certify_initial_order(const std::variant<double, OffspringLaw>& low,
                                       const std::variant<double, OffspringLaw>& high);

// ---- couplings ----------------------------------------------------------------

struct CoupledPair {
    ProcessSpec spec_low;
    ProcessSpec spec_high;
    std::uint64_t shared_seed = 0;
    Trajectory low;
    Trajectory high;
    std::size_t steps_compared = 0;
};

// Runs two chains in lockstep: U0 inverts both initial laws, U_n drives both steps.
// Throws PreconditionError for variants that consume more than one uniform per step.
// Throws InvariantError if low exceeds high at any step.
CoupledPair coupled_paths(const ProcessSpec& low, const ProcessSpec& high, std::size_t n_steps,
                          std::uint64_t seed);

// Same law, ordered fixed initial states z0_low <= z0_high.
CoupledPair coupled_monotone_paths(const ProcessSpec& spec, double z0_low, double z0_high,
                                   std::size_t n_steps, std::uint64_t seed);

// Certifies F' ≺ F'', G' ≺ G'', H' ≺ H'' first (PreconditionError on failure).
CoupledPair coupled_parameter_paths(const ProcessSpec& low, const ProcessSpec& high,
                                    std::size_t n_steps, std::uint64_t seed);

// ---- scaling transport -------------------------------------------------------------

// Spec of λZ: offspring F_λ(x) = F(x/λ)^{1/λ}, fixed initial state scaled by λ.
ProcessSpec transport_spec(const ProcessSpec& spec, double lambda);

struct TransportReport {
    double lambda = 1.0;
    std::size_t n_cases = 0;
    // max |λ step(z,u;F) - step(λz,u;F_λ)| / |λ step(z,u;F)|
    double max_relative_diff = 0.0;
    // Fréchet(c, β) maps to Fréchet(c λ^{1-1/β}, β); difference between the
    // closed form and the generic transported CDF on a grid.
    std::optional<offspring::Frechet> closed_form;
    double closed_form_max_diff = 0.0;
};

TransportReport scaling_transport(const ProcessSpec& spec, double lambda, std::size_t n_cases,
                                  std::uint64_t seed);

// ---- association ---------------------------------------------------------------

struct CovarianceEstimate {
    double covariance = 0.0;
    double std_error = 0.0;
};

CovarianceEstimate sample_covariance(const std::vector<double>& x, const std::vector<double>& y);

struct AssociationEntry {
    std::string f;
    std::string g;
    double covariance = 0.0;
    double std_error = 0.0;
    bool pass = true;  // covariance >= -4 std_error
};

struct AssociationReport {
    std::vector<std::size_t> indices;
    std::size_t n_samples = 0;
    std::vector<AssociationEntry> entries;
    bool all_pass = true;
};

// Estimates cov(f(Z_{i1..im}), g(Z_{i1..im})) over a bank of nondecreasing
// functions: coordinate projections, arctan of coordinates, upper-orthant
// indicators at marginal medians, the coordinate sum and the coordinate max.
AssociationReport association_test(const ProcessSpec& spec, const std::vector<std::size_t>& indices,
                                   std::size_t n_samples, std::uint64_t seed, unsigned threads = 1);

// ---- stationary law --------------------------------------------------------------

struct StationaryOptions {
    std::size_t burn_in = 200;
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<double> moment_orders;
    // Skip the classification gate.
    bool override_gate = false;
    std::size_t jackknife_groups = 20;
    double ks_alpha = 0.01;
};

struct MomentEstimate {
    double s = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

struct StationaryEstimate {
    std::size_t burn_in = 0;
    std::size_t n_samples = 0;
    std::size_t thinning = 1;
    Verdict gate_verdict = Verdict::Indeterminate;
    bool gate_overridden = false;
    // Sorted terminal states after burn_in steps, one per independent path.
    std::vector<double> sorted_samples;
    std::vector<MomentEstimate> moments;
    // KS between the even- and odd-indexed paths.
    KsResult half_ks;
    double half_ks_critical = 0.0;
    bool stabilization_warning = false;

    // Ψ̂(x)
    double ecdf(double x) const;
};

// Terminal states Z_{burn_in} of n paths with seeds derive_seed(seed, i).
std::vector<double> stationary_samples(const ProcessSpec& spec, std::size_t burn_in, std::size_t n,
                                       std::uint64_t seed, unsigned threads = 1);

// Throws PreconditionError unless the spec classifies Ergodic or the gate is overridden.
StationaryEstimate estimate_stationary(const ProcessSpec& spec, const StationaryOptions& options);

struct OrderCheckReport {
    std::vector<double> grid;
    std::vector<double> cdf_low;
    std::vector<double> cdf_high;
    // min over the grid of (Ψ̂' - Ψ̂'' + 4 se) / se; positive means ordered.
    double worst_margin = 0.0;
    bool pass = false;
};

// Checks Ψ̂'(x) >= Ψ̂''(x) - 4 se on a grid of pooled sample quantiles.
OrderCheckReport stationary_order_check(const ProcessSpec& low, const ProcessSpec& high,
                                        const StationaryOptions& options,
                                        std::size_t grid_points = 50);

// ---- degeneracy -----------------------------------------------------------------

struct DegeneracyReport {
    Verdict verdict = Verdict::Indeterminate;
    std::vector<std::size_t> steps;
    std::vector<double> absorbed_fraction;
    bool nondecreasing = true;
};

// Fraction of n_paths absorbed by step n, for n in `steps` (all steps 0..n_steps if empty).
DegeneracyReport degeneracy_experiment(const ProcessSpec& spec, std::size_t n_steps,
                                       std::size_t n_paths, std::uint64_t seed,
                                       unsigned threads = 1, std::vector<std::size_t> steps = {});

nlohmann::json to_json(const KsResult& r);
nlohmann::json to_json(const StationaryEstimate& e);
nlohmann::json to_json(const OrderCheckReport& r);
nlohmann::json to_json(const DegeneracyReport& r);
nlohmann::json to_json(const AssociationReport& r);

} // namespace mbp
