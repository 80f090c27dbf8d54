#pragma once

// Step kernels and trajectory engines for the four process variants:
//
//   MbpInteger    Z' = max_{m<=Z} ξ_m,              ξ iid F on Z+
//   MbpContinuous Z' = F^{-1}(U^{1/Z})
//   MbpreInteger  Z' = max_{m<=Z} ξ_m,  ξ iid F_ν,  ν ~ G on N
//   Mbpplre       Z' = F^{-1}(exp(-φ^{-1}(U)/Z))
//
// State 0 is absorbing in every variant.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mbp/distributions.hpp"
#include "mbp/rng.hpp"

namespace mbp {

enum class Variant { MbpInteger, MbpContinuous, MbpreInteger, Mbpplre };

const char* variant_name(Variant v) noexcept;

// Positive states below this are treated as absorbed (Fréchet quantile underflow).
inline constexpr double kAbsorptionFloor = 1e-300;
// Above this population the integer kernels draw the maximum directly from F^z.
inline constexpr std::uint64_t kDirectMaxThreshold = 1'000'000;

struct ProcessSpec {
    Variant variant = Variant::Mbpplre;
    OffspringLaw offspring = OffspringLaw::frechet(1.0, 2.0);
    // MbpreInteger only: F_1, F_2, ... selected by the environment draw ν.
    std::vector<OffspringLaw> offspring_family;
    EnvironmentLaw environment = EnvironmentLaw::degenerate(1.0);
    // Fixed Z0, or an initial law H sampled as H^{-1}(U0) from the path stream.
    std::variant<double, OffspringLaw> initial = 1.0;
    std::uint64_t direct_max_threshold = kDirectMaxThreshold;

    // Throws ConfigError when the laws do not fit the variant's state set.
    void validate() const;
    bool single_uniform() const noexcept {
        return variant == Variant::MbpContinuous || variant == Variant::Mbpplre;
    }
};

struct Trajectory {
    std::vector<double> states;
    std::uint64_t seed = 0;
    std::optional<std::size_t> absorbed_at;
    // Absorption came from clamping a state below kAbsorptionFloor.
    bool numeric_absorption = false;
    std::optional<std::vector<double>> zeta;
};

// ---- step kernels ----------------------------------------------------------

double step_mbpplre(double z, double u, const OffspringLaw& law, const EnvironmentLaw& env);
double step_mbp_continuous(double z, double u, const OffspringLaw& law);
double step_mbp_integer(double z, RngStream& rng, const OffspringLaw& law,
                        std::uint64_t direct_threshold = kDirectMaxThreshold);
double step_mbpre_integer(double z, RngStream& rng, std::span<const OffspringLaw> family,
                          const EnvironmentLaw& env,
                          std::uint64_t direct_threshold = kDirectMaxThreshold);
// Z' = w z^{1/β} (Fréchet offspring).
double step_frechet_multiplicative(double z, double w, double beta);
// Multiplier W = c φ^{-1}(u)^{-1/β}, distributed with CDF φ((x/c)^{-β}).
double frechet_multiplier(double u, const offspring::Frechet& law, const EnvironmentLaw& env);
// ζ' = ln F^{-1}(Λ(ζ)) + η. Throws UnsupportedTransform unless F is continuous,
// strictly increasing with F(0) = 0.
double step_autoregression(double zeta, double eta, const OffspringLaw& law);
// Batched Fréchet autoregression ζ' = ζ/β + ln c + η.
void advance_frechet_zeta(std::span<double> zeta, const offspring::Frechet& law,
                          std::span<const double> eta);

// One step with a single shared uniform: the Mbpplre/MbpContinuous kernel, or the
// direct F^z inverse for MbpInteger. Used by simulate() and by the couplings.
double step_shared(const ProcessSpec& spec, double z, double u);

// ---- transforms --------------------------------------------------------------

// Λ^{-1}(F(z)) = -ln(-ln F(z)).
double gumbel_transform(double z, const OffspringLaw& law);
// Noise of the autoregression, η = -ln φ^{-1}(u); CDF φ(e^{-x}).
double eta_from_uniform(double u, const EnvironmentLaw& env);
// Same law drawn as ln ν + Gumbel.
double sample_eta(const EnvironmentLaw& env, RngStream& rng);
// P(Z' <= y | Z = x) = φ(-x ln F(y)).
double transition_cdf(const OffspringLaw& law, const EnvironmentLaw& env, double x, double y);

// ---- trajectory engines ------------------------------------------------------

double draw_initial(const ProcessSpec& spec, RngStream& rng);
Trajectory simulate(const ProcessSpec& spec, std::size_t n_steps, std::uint64_t seed);
// Path i uses seed derive_seed(base_seed, i). Output is identical for any `threads`.
std::vector<Trajectory> simulate_batch(const ProcessSpec& spec, std::size_t n_steps,
                                       std::size_t n_paths, std::uint64_t base_seed,
                                       unsigned threads = 1);
// Fills trajectory.zeta; UnsupportedTransform for laws with atoms.
void attach_zeta(Trajectory& trajectory, const OffspringLaw& law);

// Runs fn(i) for i in [0, n) over `threads` workers, strided.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn);

} // namespace mbp

#include "mbp/detail/parallel.hpp"
