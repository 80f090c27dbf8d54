#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mbp/constants.hpp"
#include "mbp/distributions.hpp"
#include "mbp/error.hpp"

using namespace mbp;

namespace {

const double kE = std::exp(1.0);
const double kInf = std::numeric_limits<double>::infinity();

std::vector<EnvironmentLaw> all_environments() {
    return {EnvironmentLaw::degenerate(1.0),
            EnvironmentLaw::degenerate(2.5),
            EnvironmentLaw::exponential(0.5),
            EnvironmentLaw::exponential(2.0),
            EnvironmentLaw::strictly_stable(0.3, 0.5),
            EnvironmentLaw::strictly_stable(0.5, 1.0),
            EnvironmentLaw::strictly_stable(0.8, 2.0),
            EnvironmentLaw::heavy_log_tail(),
            EnvironmentLaw::empirical({1.0, 2.0, 5.0}, {0.2, 0.5, 0.3})};
}

} // namespace

TEST_CASE("offspring cdf examples") {
    CHECK(OffspringLaw::frechet(1.0, 2.0).cdf(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    const auto q = OffspringLaw::queue_induced(1.0, ServiceLaw::exponential(1.0));
    CHECK(q.cdf(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(q.atom_at_zero() == doctest::Approx(std::exp(-1.0)));

    const std::vector<OffspringLaw> laws{
        OffspringLaw::frechet(1.0, 2.0), OffspringLaw::unit_frechet(0.7),
        OffspringLaw::gumbel_shifted(0.5), q, OffspringLaw::integer_tail(0.4),
        OffspringLaw::empirical({0.0, 1.0, 3.0}, {0.1, 0.6, 1.0}),
        OffspringLaw::scaled(OffspringLaw::frechet(2.0, 3.0), 2.0)};
    for (const auto& law : laws) {
        CHECK(law.cdf(kInf) == 1.0);
        CHECK(law.cdf(1e300) == doctest::Approx(1.0));
        CHECK_THROWS_AS(law.cdf(-1.0), DomainError);
        CHECK_THROWS_AS(law.cdf(std::nan("")), DomainError);
    }
}

TEST_CASE("gumbel-shifted law keeps its value at zero as an atom") {
    const auto g = OffspringLaw::gumbel_shifted(0.3);
    CHECK(g.atom_at_zero() == doctest::Approx(std::exp(-std::exp(0.3))));
    CHECK(g.quantile(0.5 * g.atom_at_zero()) == 0.0);
}

TEST_CASE("queue-induced law from exponential service is the Gumbel CDF on [0,inf)") {
    const auto q = OffspringLaw::queue_induced(1.0, ServiceLaw::exponential(1.0));
    for (double x : {0.0, 0.3, 1.0, 2.5, 7.0}) {
        CHECK(q.cdf(x) == doctest::Approx(std::exp(-std::exp(-x))).epsilon(1e-14));
    }
    // λ -> 0: stages collapse, F -> 1 everywhere.
    const auto tiny = OffspringLaw::queue_induced(1e-12, ServiceLaw::exponential(1.0));
    CHECK(tiny.cdf(0.0) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("quantile examples") {
    CHECK(OffspringLaw::frechet(1.0, 2.0).quantile(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(OffspringLaw::frechet(2.0, 1.0).quantile(std::exp(-1.0)) == doctest::Approx(2.0).epsilon(1e-15));

    const auto it = OffspringLaw::integer_tail(0.4);
    for (double k : {1.0, 2.0, 7.0, 100.0, 12345.0}) {
        const double fk = it.cdf(k);
        CHECK(it.quantile(fk) == k);
        CHECK(it.quantile(std::nextafter(fk, 1.0)) == k + 1.0);
    }
    CHECK_THROWS_AS(it.quantile(0.0), DomainError);
    CHECK_THROWS_AS(it.quantile(1.0), DomainError);
    CHECK_THROWS_AS(OffspringLaw::frechet(1.0, 2.0).quantile(-0.1), DomainError);
}

TEST_CASE("integer-tail law has x(1-F(x)) -> q") {
    const auto it = OffspringLaw::integer_tail(0.4);
    for (double x : {1e3, 1e5, 1e7}) CHECK(x * (1.0 - it.cdf(x)) == doctest::Approx(0.4).epsilon(1e-3));
    CHECK(it.cdf(0.0) == 0.0);
    CHECK(it.cdf(1.0) == doctest::Approx(0.6));
    CHECK(it.is_integer());

    const auto headed = OffspringLaw::integer_tail(0.7, {0.0, 0.5});
    CHECK(headed.cdf(1.0) == 0.5);
    CHECK(headed.cdf(2.0) == doctest::Approx(0.65));
    CHECK(headed.quantile(0.4) == 1.0);
}

TEST_CASE("frechet tail functional is exactly c^beta x^(1-beta)") {
    const auto f = OffspringLaw::frechet(1.7, 2.3);
    for (double x : {0.01, 0.5, 3.0, 40.0}) {
        CHECK(x * -f.log_cdf(x) == doctest::Approx(std::pow(1.7, 2.3) * std::pow(x, 1.0 - 2.3)).epsilon(1e-13));
    }
}

TEST_CASE("empirical offspring law uses step interpolation and exact generalized inverse") {
    const auto e = OffspringLaw::empirical({0.0, 1.0, 3.0}, {0.1, 0.6, 1.0});
    CHECK(e.cdf(0.5) == 0.1);
    CHECK(e.cdf(2.99) == 0.6);
    CHECK(e.quantile(0.1) == 0.0);
    CHECK(e.quantile(0.1000001) == 1.0);
    CHECK(e.quantile(0.6) == 1.0);
    CHECK(e.quantile(0.61) == 3.0);
    CHECK(e.is_integer());
    CHECK_THROWS_AS(OffspringLaw::empirical({1.0, 0.5}, {0.5, 1.0}), DomainError);
    CHECK_THROWS_AS(OffspringLaw::empirical({1.0, 2.0}, {0.5, 0.9}), DomainError);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(OffspringLaw::frechet(1.0, -1.0), DomainError);
    CHECK_THROWS_AS(OffspringLaw::frechet(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(OffspringLaw::queue_induced(0.0, ServiceLaw::exponential(1.0)), DomainError);
    CHECK_THROWS_AS(EnvironmentLaw::strictly_stable(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(EnvironmentLaw::strictly_stable(0.5, -1.0), DomainError);
    CHECK_THROWS_AS(EnvironmentLaw::exponential(0.0), DomainError);
    CHECK_THROWS_AS(EnvironmentLaw::empirical({1.0}, {0.5}), DomainError);
    CHECK_THROWS_AS(ServiceLaw::pareto(0.0, 1.0), DomainError);
}

TEST_CASE("round trip cdf(quantile(u)) for continuous families") {
    const std::vector<OffspringLaw> laws{
        OffspringLaw::frechet(1.0, 2.0), OffspringLaw::frechet(3.0, 0.6),
        OffspringLaw::unit_frechet(1.0), OffspringLaw::gumbel_shifted(1.5),
        OffspringLaw::queue_induced(2.0, ServiceLaw::exponential(0.5)),
        OffspringLaw::queue_induced(1.0, ServiceLaw::pareto(1.5, 2.0)),
        OffspringLaw::scaled(OffspringLaw::frechet(1.0, 2.0), 3.0)};
    RngStream rng(2024);
    for (const auto& law : laws) {
        const double atom = law.atom_at_zero();
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double u = atom + (1.0 - atom) * rng.uniform();
            worst = std::max(worst, std::abs(law.cdf(law.quantile(u)) - u));
        }
        INFO(law.name());
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("lst examples and domain") {
    CHECK(EnvironmentLaw::exponential(1.0).lst(1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(EnvironmentLaw::strictly_stable(0.5, 1.0).lst(4.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    for (const auto& env : all_environments()) {
        CHECK(env.lst(0.0) == 1.0);
        CHECK_THROWS_AS(env.lst(-1.0), DomainError);
    }
    CHECK(EnvironmentLaw::degenerate(1.0).lst(0.7) == doctest::Approx(std::exp(-0.7)).epsilon(1e-15));
}

TEST_CASE("heavy log-tail lst against an independent quadrature") {
    // Frozen from an adaptive quadrature of ∫_1^∞ exp(-u e^t) t^{-2} dt (scipy.integrate.quad).
    const auto env = EnvironmentLaw::heavy_log_tail();
    CHECK(env.lst(1e-3) == doctest::Approx(0.8308010378211994).epsilon(1e-10));
    CHECK(env.lst(0.5) == doctest::Approx(0.07412277343135218).epsilon(1e-10));
    CHECK(env.lst(1.0) == doctest::Approx(0.013098435732272075).epsilon(1e-10));
    CHECK(env.lst(3.0) == doctest::Approx(2.6649686373601403e-05).epsilon(1e-9));
    CHECK(env.lst_complement_at_log_arg(-100.0) == doctest::Approx(0.010059756608909126).epsilon(1e-9));
    CHECK(env.lst(1e-3) + env.lst_complement(1e-3) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("lst_inverse examples") {
    CHECK(EnvironmentLaw::exponential(1.0).lst_inverse(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(EnvironmentLaw::strictly_stable(0.5, 1.0).lst_inverse(std::exp(-2.0)) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(EnvironmentLaw::degenerate(1.0).lst_inverse(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(EnvironmentLaw::degenerate(1.0).lst_inverse(1.0), DomainError);
    CHECK_THROWS_AS(EnvironmentLaw::heavy_log_tail().lst_inverse(0.0), DomainError);
}

TEST_CASE("lst_inverse residual on a grid of v") {
    for (const auto& env : all_environments()) {
        double worst = 0.0;
        auto residual = [&env](double v) {
            const double u = env.lst_inverse(v);
            // Below the smallest normal double the inverse is only representable in log form.
            if (u < 1e-300) return std::abs(env.lst_at_log_arg(env.log_lst_inverse(v)) - v);
            return std::abs(env.lst(u) - v);
        };
        for (int i = 1; i < 100; ++i) worst = std::max(worst, residual(i / 100.0));
        for (double v : {1e-6, 1e-3, 0.999, 0.999999}) worst = std::max(worst, residual(v));
        INFO(env.name());
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("log_lst_inverse stays finite where the heavy-tail inverse underflows") {
    const auto env = EnvironmentLaw::heavy_log_tail();
    const double w = env.log_lst_inverse(1.0 - 1e-4);
    CHECK(std::isfinite(w));
    CHECK(w < -700.0);
    CHECK(env.lst_complement_at_log_arg(w) == doctest::Approx(1e-4).epsilon(1e-8));
}

TEST_CASE("lst is convex and decreasing on a log grid") {
    for (const auto& env : all_environments()) {
        double worst_second = 0.0, worst_slope = -1.0;
        for (int i = -40; i < 20; ++i) {
            const double u = std::pow(10.0, i / 10.0);
            const double h = 0.01 * u;
            const double second = env.lst(u + h) - 2.0 * env.lst(u) + env.lst(u - h);
            worst_second = std::min(worst_second, second);
            worst_slope = std::max(worst_slope, env.lst(u + h) - env.lst(u));
        }
        INFO(env.name());
        CHECK(worst_second >= -1e-8);
        CHECK(worst_slope <= 0.0);
    }
}

TEST_CASE("degenerate(1) environment is the no-environment transform") {
    const auto env = EnvironmentLaw::degenerate(1.0);
    CHECK(env.is_degenerate_one());
    for (double u : {0.0, 0.1, 1.0, 5.0}) CHECK(env.lst(u) == doctest::Approx(std::exp(-u)).epsilon(1e-15));
    CHECK_FALSE(EnvironmentLaw::degenerate(2.0).is_degenerate_one());
}

TEST_CASE("sample_nu examples") {
    RngStream rng(7);
    const auto d = EnvironmentLaw::degenerate(3.0);
    for (int i = 0; i < 10; ++i) CHECK(d.sample_nu(rng) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(heavy_log_tail_from_uniform(0.5) == doctest::Approx(kE * kE).epsilon(1e-15));
}

TEST_CASE("Monte Carlo consistency of the nu samplers with the lst") {
    constexpr int kN = 1'000'000;
    for (const auto& env : {EnvironmentLaw::strictly_stable(0.5, 1.0),
                            EnvironmentLaw::strictly_stable(0.3, 2.0),
                            EnvironmentLaw::exponential(2.0), EnvironmentLaw::heavy_log_tail(),
                            EnvironmentLaw::empirical({1.0, 2.0, 5.0}, {0.2, 0.5, 0.3})}) {
        RngStream rng(99);
        std::vector<double> log_nu(kN);
        for (auto& v : log_nu) v = env.sample_log_nu(rng);
        for (double u : {0.1, 1.0, 10.0}) {
            double s = 0.0, s2 = 0.0;
            for (double ln : log_nu) {
                const double e = std::exp(-u * std::exp(ln));
                s += e;
                s2 += e * e;
            }
            const double mean = s / kN;
            const double se = std::sqrt((s2 / kN - mean * mean) / kN);
            INFO(env.name() << " u=" << u << " mean=" << mean << " phi=" << env.lst(u));
            CHECK(std::abs(mean - env.lst(u)) <= 4.0 * se + 1e-12);
        }
    }
}

TEST_CASE("stable sampler reproduces E exp(-nu) = e^-1 within 3 standard errors") {
    const auto env = EnvironmentLaw::strictly_stable(0.5, 1.0);
    RngStream rng(31337);
    constexpr int kN = 1'000'000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < kN; ++i) {
        const double e = std::exp(-env.sample_nu(rng));
        s += e;
        s2 += e * e;
    }
    const double mean = s / kN;
    const double se = std::sqrt((s2 / kN - mean * mean) / kN);
    CHECK(std::abs(mean - std::exp(-1.0)) <= 3.0 * se);
}

TEST_CASE("mean_log_nu") {
    CHECK(EnvironmentLaw::strictly_stable(0.5, 1.0).mean_log_nu().value == doctest::Approx(kEulerGamma).epsilon(1e-15));
    CHECK(EnvironmentLaw::degenerate(1.0).mean_log_nu().value == 0.0);
    CHECK(EnvironmentLaw::exponential(kE).mean_log_nu().value == doctest::Approx(1.0 - kEulerGamma));
    CHECK(EnvironmentLaw::heavy_log_tail().mean_log_nu().kind == ExtendedReal::Kind::PosInf);
    const auto emp = EnvironmentLaw::empirical({1.0, kE}, {0.5, 0.5});
    CHECK(emp.mean_log_nu().value == doctest::Approx(0.5));
}

TEST_CASE("service laws") {
    const auto e = ServiceLaw::exponential(2.0);
    CHECK(e.survival(2.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(e.quantile_from_survival(std::exp(-1.0)) == doctest::Approx(2.0));
    CHECK(e.quantile_from_survival(1.0) == 0.0);
    const auto d = ServiceLaw::deterministic(3.0);
    CHECK(d.survival(2.999) == 1.0);
    CHECK(d.survival(3.0) == 0.0);
    CHECK(d.quantile_from_survival(0.3) == 3.0);
    CHECK(d.is_integer());
    const auto p = ServiceLaw::pareto(2.0, 1.0);
    CHECK(p.survival(2.0) == doctest::Approx(0.25));
    CHECK(p.quantile_from_survival(0.25) == doctest::Approx(2.0));
    CHECK(p.mean() == doctest::Approx(2.0));
}
