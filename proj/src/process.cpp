#include "mbp/process.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mbp/error.hpp"
#include "mbp/kernels.hpp"

namespace mbp {

namespace {

void check_step_args(double z, double u) {
    if (!(z > 0.0)) throw DomainError("step: state must be > 0 (absorption is handled by the engine)");
    if (!(u > 0.0 && u < 1.0)) throw DomainError("step: u must lie in (0,1)");
}

// F^{-1}(exp(log_p)), mapping log_p = -inf to the lowest support point.
double quantile_guarded(const OffspringLaw& law, double log_p) {
    if (log_p == -std::numeric_limits<double>::infinity()) {
        log_p = -std::numeric_limits<double>::max();
    }
    return law.quantile_log(log_p);
}

bool integral(double x) { return std::isfinite(x) && std::floor(x) == x; }

double max_of_draws(double z, RngStream& rng, const OffspringLaw& law, std::uint64_t threshold) {
    if (z == 0.0) return 0.0;
    if (z > static_cast<double>(threshold)) {
        // max of z iid draws has CDF F^z: invert it with one uniform.
        return quantile_guarded(law, std::log(rng.uniform()) / z);
    }
    const auto n = static_cast<std::uint64_t>(z);
    double best = 0.0;
    for (std::uint64_t m = 0; m < n; ++m) best = std::max(best, law.quantile(rng.uniform()));
    return best;
}

} // namespace

const char* variant_name(Variant v) noexcept {
    switch (v) {
        case Variant::MbpInteger: return "mbp_integer";
        case Variant::MbpContinuous: return "mbp_continuous";
        case Variant::MbpreInteger: return "mbpre_integer";
        case Variant::Mbpplre: return "mbpplre";
    }
    return "unknown";
}

void ProcessSpec::validate() const {
    if (const auto* z0 = std::get_if<double>(&initial)) {
        if (!std::isfinite(*z0) || *z0 < 0.0) throw ConfigError("initial: Z0 must be finite and >= 0");
        const bool integer_variant =
            variant == Variant::MbpInteger || variant == Variant::MbpreInteger;
        if (integer_variant && !integral(*z0)) {
            throw ConfigError("initial: integer-valued process needs an integer Z0");
        }
    }
    switch (variant) {
        case Variant::MbpInteger:
            if (!offspring.is_integer()) {
                throw ConfigError("offspring: mbp_integer needs a law on the nonnegative integers");
            }
            break;
        case Variant::MbpreInteger: {
            if (offspring_family.empty()) throw ConfigError("offspring_family: must not be empty");
            for (const auto& f : offspring_family) {
                if (!f.is_integer()) {
                    throw ConfigError("offspring_family: every law must live on the nonnegative integers");
                }
            }
            const auto& fam = environment.family();
            std::vector<double> support;
            if (const auto* d = std::get_if<environment::Degenerate>(&fam)) support = {d->a};
            else if (const auto* e = std::get_if<environment::Empirical>(&fam)) support = e->values;
            else throw ConfigError("environment: mbpre_integer needs a degenerate or empirical law on N");
            for (double l : support) {
                if (!integral(l) || l < 1.0 || l > static_cast<double>(offspring_family.size())) {
                    throw ConfigError("environment: index " + std::to_string(l) +
                                      " does not select a law of offspring_family");
                }
            }
            break;
        }
        case Variant::MbpContinuous:
        case Variant::Mbpplre:
            break;
    }
    if (direct_max_threshold == 0) throw ConfigError("direct_max_threshold must be >= 1");
}

double step_mbpplre(double z, double u, const OffspringLaw& law, const EnvironmentLaw& env) {
    check_step_args(z, u);
    const double inv = env.lst_inverse(u);
    double log_p;
    if (inv > 0.0 && std::isfinite(inv)) {
        log_p = -(inv / z);
    } else {
        log_p = -std::exp(env.log_lst_inverse(u) - std::log(z));
    }
    return quantile_guarded(law, log_p);
}

double step_mbp_continuous(double z, double u, const OffspringLaw& law) {
    check_step_args(z, u);
    return quantile_guarded(law, std::log(u) / z);
}

double step_mbp_integer(double z, RngStream& rng, const OffspringLaw& law,
                        std::uint64_t direct_threshold) {
    if (std::isnan(z) || z < 0.0) throw DomainError("step_mbp_integer: state must be >= 0");
    return max_of_draws(std::floor(z), rng, law, direct_threshold);
}

double step_mbpre_integer(double z, RngStream& rng, std::span<const OffspringLaw> family,
                          const EnvironmentLaw& env, std::uint64_t direct_threshold) {
    if (std::isnan(z) || z < 0.0) throw DomainError("step_mbpre_integer: state must be >= 0");
    if (z == 0.0) return 0.0;
    const double nu = std::round(env.sample_nu(rng));
    if (nu < 1.0 || nu > static_cast<double>(family.size())) {
        throw ConfigError("step_mbpre_integer: environment index " + std::to_string(nu) +
                          " outside the offspring family");
    }
    return max_of_draws(std::floor(z), rng, family[static_cast<std::size_t>(nu) - 1], direct_threshold);
}

double step_frechet_multiplicative(double z, double w, double beta) {
    if (!(z > 0.0) || !(w > 0.0) || !(beta > 0.0)) {
        throw DomainError("step_frechet_multiplicative: z, w and beta must be > 0");
    }
    return w * std::pow(z, 1.0 / beta);
}

double frechet_multiplier(double u, const offspring::Frechet& law, const EnvironmentLaw& env) {
    return law.c * std::pow(env.lst_inverse(u), -1.0 / law.beta);
}

double step_autoregression(double zeta, double eta, const OffspringLaw& law) {
    if (!law.is_continuous_strict()) {
        throw UnsupportedTransform("autoregression form needs a continuous, strictly increasing F "
                                   "with F(0)=0; " + law.name() + " does not qualify");
    }
    if (const auto fr = law.as_frechet()) return zeta / fr->beta + std::log(fr->c) + eta;
    return std::log(law.quantile_log(-std::exp(-zeta))) + eta;
}

void advance_frechet_zeta(std::span<double> zeta, const offspring::Frechet& law,
                          std::span<const double> eta) {
    if (zeta.size() != eta.size()) throw DomainError("advance_frechet_zeta: size mismatch");
    kernels::affine_noise(zeta, 1.0 / law.beta, std::log(law.c), eta);
}

double step_shared(const ProcessSpec& spec, double z, double u) {
    if (z == 0.0) return 0.0;
    switch (spec.variant) {
        case Variant::Mbpplre: return step_mbpplre(z, u, spec.offspring, spec.environment);
        case Variant::MbpContinuous:
        case Variant::MbpInteger: return step_mbp_continuous(z, u, spec.offspring);
        case Variant::MbpreInteger: break;
    }
    throw PreconditionError("mbpre_integer consumes more than one uniform per step");
}

double gumbel_transform(double z, const OffspringLaw& law) {
    return -std::log(-law.log_cdf(z));
}

double eta_from_uniform(double u, const EnvironmentLaw& env) { return -env.log_lst_inverse(u); }

double sample_eta(const EnvironmentLaw& env, RngStream& rng) {
    return env.sample_log_nu(rng) + rng.gumbel();
}

double transition_cdf(const OffspringLaw& law, const EnvironmentLaw& env, double x, double y) {
    if (x == 0.0) return 1.0;
    const double lf = law.log_cdf(y);
    if (std::isinf(lf)) return 0.0;
    return env.lst(-x * lf);
}

double draw_initial(const ProcessSpec& spec, RngStream& rng) {
    if (const auto* z0 = std::get_if<double>(&spec.initial)) return *z0;
    return std::get<OffspringLaw>(spec.initial).quantile(rng.uniform());
}

Trajectory simulate(const ProcessSpec& spec, std::size_t n_steps, std::uint64_t seed) {
    RngStream rng(seed);
    Trajectory t;
    t.seed = seed;
    t.states.reserve(n_steps + 1);
    double z = draw_initial(spec, rng);
    t.states.push_back(z);
    if (z == 0.0) t.absorbed_at = 0;
    for (std::size_t n = 1; n <= n_steps; ++n) {
        if (z != 0.0) {
            try {
                switch (spec.variant) {
                    case Variant::MbpInteger:
                        z = step_mbp_integer(z, rng, spec.offspring, spec.direct_max_threshold);
                        break;
                    case Variant::MbpreInteger:
                        z = step_mbpre_integer(z, rng, spec.offspring_family, spec.environment,
                                               spec.direct_max_threshold);
                        break;
                    case Variant::MbpContinuous:
                    case Variant::Mbpplre:
                        z = step_shared(spec, z, rng.uniform());
                        break;
                }
            } catch (const NumericError& e) {
                throw NumericError(e.what(), static_cast<std::ptrdiff_t>(n));
            }
            if (std::isnan(z)) {
                throw NumericError("simulate: state became NaN", static_cast<std::ptrdiff_t>(n));
            }
            if (z > 0.0 && z < kAbsorptionFloor) {
                z = 0.0;
                t.numeric_absorption = true;
            }
            if (z == 0.0) t.absorbed_at = n;
        }
        t.states.push_back(z);
    }
    return t;
}

std::vector<Trajectory> simulate_batch(const ProcessSpec& spec, std::size_t n_steps,
                                       std::size_t n_paths, std::uint64_t base_seed,
                                       unsigned threads) {
    std::vector<Trajectory> out(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        out[i] = simulate(spec, n_steps, derive_seed(base_seed, i));
    });
    return out;
}

void attach_zeta(Trajectory& trajectory, const OffspringLaw& law) {
    if (!law.is_continuous_strict()) {
        throw UnsupportedTransform("zeta path needs a continuous, strictly increasing F with F(0)=0");
    }
    std::vector<double> zeta;
    zeta.reserve(trajectory.states.size());
    for (double z : trajectory.states) zeta.push_back(gumbel_transform(z, law));
    trajectory.zeta = std::move(zeta);
}

} // namespace mbp
