#include <doctest.h>

#include <cmath>
#include <vector>

#include "mbp/analysis.hpp"
#include "mbp/constants.hpp"
#include "mbp/error.hpp"

using namespace mbp;

namespace {
const double kE = std::exp(1.0);
}

TEST_CASE("compute_delta examples") {
    const auto e1 = compute_delta(EnvironmentLaw::exponential(1.0));
    CHECK(e1.delta.value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(e1.method == DeltaMethod::ClosedForm);
    REQUIRE(e1.delta_quadrature.has_value());
    CHECK(std::abs(*e1.delta_quadrature) <= 1e-6);

    const auto s = compute_delta(EnvironmentLaw::strictly_stable(0.5, 1.0));
    CHECK(s.delta.value == doctest::Approx(2.0 * kEulerGamma).epsilon(1e-14));
    CHECK(s.e_minus_delta == doctest::Approx(std::exp(-2.0 * kEulerGamma)));

    const auto d = compute_delta(EnvironmentLaw::degenerate(1.0));
    CHECK(d.delta.value == doctest::Approx(kEulerGamma).epsilon(1e-15));

    const auto h = compute_delta(EnvironmentLaw::heavy_log_tail());
    CHECK(h.delta.kind == ExtendedReal::Kind::PosInf);
    CHECK(h.e_minus_delta == 0.0);
}

TEST_CASE("quadrature reproduces the closed-form drift") {
    for (double theta : {0.5, 1.0, 2.0, kE}) {
        const auto q = delta_by_quadrature(EnvironmentLaw::exponential(theta));
        CAPTURE(theta);
        CHECK(q.converged);
        CHECK(std::abs(q.value - std::log(theta)) <= 1e-6);
    }
    for (double alpha : {0.3, 0.5, 0.8}) {
        for (double c : {0.5, 1.0, 2.0}) {
            const auto q = delta_by_quadrature(EnvironmentLaw::strictly_stable(alpha, c));
            CAPTURE(alpha);
            CAPTURE(c);
            CHECK(std::abs(q.value - (kEulerGamma + std::log(c)) / alpha) <= 1e-6);
        }
    }
    const auto emp = EnvironmentLaw::empirical({0.5, 3.0}, {0.25, 0.75});
    CHECK(std::abs(delta_by_quadrature(emp).value - (kEulerGamma + emp.mean_log_nu().value)) <= 1e-6);
}

TEST_CASE("e^-delta is strictly decreasing in theta for the exponential environment") {
    double prev = 1e300;
    for (double theta = 0.1; theta < 10.0; theta *= 1.5) {
        const double t = compute_delta(EnvironmentLaw::exponential(theta)).e_minus_delta;
        CHECK(t < prev);
        prev = t;
    }
}

TEST_CASE("tail functionals") {
    const auto f = tail_functionals(OffspringLaw::frechet(1.0, 2.0));
    CHECK(f.liminf_at_infinity.value == 0.0);
    CHECK(f.liminf_at_infinity.is_finite());
    CHECK(f.liminf_at_zero.kind == ExtendedReal::Kind::PosInf);

    const auto one = tail_functionals(OffspringLaw::frechet(0.8, 1.0));
    CHECK(one.liminf_at_infinity.value == doctest::Approx(0.8));
    CHECK(one.liminf_at_zero.value == doctest::Approx(0.8));

    const auto small = tail_functionals(OffspringLaw::frechet(1.0, 0.5));
    CHECK(small.liminf_at_infinity.kind == ExtendedReal::Kind::PosInf);
    CHECK(small.liminf_at_zero.value == 0.0);

    const auto it = tail_functionals(OffspringLaw::integer_tail(0.4));
    CHECK(it.integer_limsup.value == doctest::Approx(0.4));

    const auto q = tail_functionals(OffspringLaw::queue_induced(1.0, ServiceLaw::exponential(1.0)));
    CHECK(q.liminf_at_infinity.value == 0.0);

    for (const auto& law : {OffspringLaw::frechet(1.0, 2.0), OffspringLaw::frechet(0.8, 1.0),
                            OffspringLaw::integer_tail(0.4)}) {
        const auto t = tail_functionals(law, TailMode::Analytic);
        if (t.liminf_at_infinity.is_finite() && t.limsup_at_infinity.is_finite()) {
            CHECK(t.liminf_at_infinity.value <= t.limsup_at_infinity.value);
        }
    }
}

TEST_CASE("numeric grid agrees with analytic limits where they are reachable") {
    const auto g = tail_functionals(OffspringLaw::frechet(0.8, 1.0), TailMode::NumericGrid);
    CHECK(g.mode == TailMode::NumericGrid);
    CHECK(g.liminf_at_infinity.value == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(g.liminf_at_zero.value == doctest::Approx(0.8).epsilon(1e-9));
    const auto it = tail_functionals(OffspringLaw::integer_tail(0.4), TailMode::NumericGrid);
    CHECK(it.integer_limsup.value == doctest::Approx(0.4).epsilon(1e-5));
}

TEST_CASE("classification examples") {
    const auto nu1 = EnvironmentLaw::degenerate(1.0);
    CHECK(classify(OffspringLaw::frechet(1.0, 2.0), nu1).verdict == Verdict::Ergodic);

    const auto up = classify(OffspringLaw::frechet(1.0, 1.0), nu1);
    CHECK(up.verdict == Verdict::Transient);
    CHECK(up.direction == Direction::ToInfinity);

    const auto down = classify(OffspringLaw::frechet(0.3, 1.0), nu1);
    CHECK(down.verdict == Verdict::Transient);
    CHECK(down.direction == Direction::ToZero);

    const auto crit = classify(OffspringLaw::frechet(kExpMinusGamma, 1.0), nu1);
    CHECK(crit.verdict == Verdict::Critical);

    CHECK(classify(OffspringLaw::queue_induced(1.0, ServiceLaw::exponential(1.0)), nu1).verdict ==
          Verdict::Degenerate);

    const auto expo = classify(OffspringLaw::frechet(1.0, 1.0), EnvironmentLaw::exponential(kE));
    CHECK(expo.verdict == Verdict::Transient);
    CHECK(expo.drift.e_minus_delta == doctest::Approx(std::exp(-1.0)));

    CHECK(classify(OffspringLaw::frechet(1.0, 2.0), EnvironmentLaw::strictly_stable(0.5, 1.0)).verdict ==
          Verdict::Ergodic);
    CHECK(classify(OffspringLaw::frechet(1.0, 2.0), EnvironmentLaw::heavy_log_tail()).verdict ==
          Verdict::Indeterminate);
}

TEST_CASE("Lamperti route for integer laws without environment") {
    const auto nu1 = EnvironmentLaw::degenerate(1.0);
    CHECK(classify(OffspringLaw::integer_tail(0.4), nu1).verdict == Verdict::Ergodic);
    CHECK(classify(OffspringLaw::integer_tail(0.7), nu1).verdict == Verdict::Transient);
    const auto atom = classify(OffspringLaw::integer_tail(0.4, {0.1}), nu1);
    CHECK(atom.verdict == Verdict::Degenerate);
    const auto critical = classify(OffspringLaw::integer_tail(kExpMinusGamma), nu1);
    // 1-F(k) = q/k exactly at q = e^-gamma gives d = 0 < pi^2/12: recurrent.
    CHECK(critical.verdict == Verdict::Ergodic);
    REQUIRE(critical.tails.critical_d.has_value());
    CHECK(critical.tails.critical_d->value == 0.0);
}

TEST_CASE("Degenerate(1) reproduces the no-environment verdicts") {
    for (const auto& law : {OffspringLaw::frechet(1.0, 2.0), OffspringLaw::frechet(1.0, 1.0),
                            OffspringLaw::frechet(0.3, 1.0)}) {
        ProcessSpec spec;
        spec.variant = Variant::MbpContinuous;
        spec.offspring = law;
        const auto a = classify(spec);
        const auto b = classify(law, EnvironmentLaw::degenerate(1.0));
        CHECK(a.verdict == b.verdict);
        CHECK(a.direction == b.direction);
        CHECK(a.drift.delta.value == doctest::Approx(kEulerGamma));
    }
}

TEST_CASE("classification JSON report") {
    const auto j = to_json(classify(OffspringLaw::frechet(1.0, 2.0), EnvironmentLaw::degenerate(1.0)));
    CHECK(j.at("verdict") == "Ergodic");
    CHECK(j.at("delta").get<double>() == doctest::Approx(kEulerGamma).epsilon(1e-8));
    CHECK(j.contains("margins"));
    CHECK(j.contains("conditions_cited"));
    CHECK(j.contains("thresholds"));
}

TEST_CASE("stationary moment product") {
    const auto m = stationary_moment_frechet_stable(0.5, 2.0, 0.5);
    // Frozen from an independent evaluation of the truncated Gamma product (scipy).
    CHECK(m.value == doctest::Approx(2.5550113338330673).epsilon(1e-12));
    CHECK(m.remainder_bound < 1e-13);
    CHECK(stationary_moment_frechet_stable(0.5, 2.0, 1e-12).value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::tgamma(1.0 - 0.5 / (0.5 * 2.0)) == doctest::Approx(std::sqrt(kPi)));
    CHECK_THROWS_AS(stationary_moment_frechet_stable(0.5, 2.0, 1.0), DomainError);
    CHECK_THROWS_AS(stationary_moment_frechet_stable(0.5, 2.0, 0.0), DomainError);
    CHECK_THROWS_AS(stationary_moment_frechet_stable(1.5, 2.0, 0.5), DomainError);

    double prev = 1.0;
    for (double s = 0.05; s < 0.99; s += 0.05) {
        const double v = stationary_moment_frechet_stable(0.5, 2.0, s).value;
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("series check for the infinite-drift environment") {
    SeriesCheckOptions opt;
    opt.tail_samples = 1'000'000;
    const auto r = delta_infinite_series_check(2.0, EnvironmentLaw::heavy_log_tail(), 10000, 5, opt);
    CHECK(r.fraction_stabilized >= 0.99);
    CHECK(std::abs(r.tail_scaled - 1.0) <= 4.0 * r.tail_scaled_stderr);

    SeriesCheckOptions light = opt;
    light.tail_samples = 1000;
    const auto g = delta_infinite_series_check(2.0, EnvironmentLaw::degenerate(1.0), 1000, 6, light);
    CHECK(g.fraction_stabilized == 1.0);
    CHECK_THROWS_AS(delta_infinite_series_check(1.0, EnvironmentLaw::degenerate(1.0), 10, 1, light),
                    DomainError);
}

TEST_CASE("drift probe") {
    CHECK(lyapunov_g(5.0, 1.0, 10.0) == 0.0);
    CHECK(lyapunov_g(100.0, 1.0, 10.0) == doctest::Approx(std::log(10.0)));
    CHECK(lyapunov_g(0.1, 1.0, 10.0) == doctest::Approx(std::log(10.0)));

    const auto nu1 = EnvironmentLaw::degenerate(1.0);
    const auto erg = drift_probe(OffspringLaw::frechet(1.0, 2.0), nu1, {1e-4, 1.0, 1e4}, 0.1, 10.0, 100000, 1);
    CHECK(erg[0].drift + 4.0 * erg[0].std_error < 0.0);
    CHECK(erg[2].drift + 4.0 * erg[2].std_error < 0.0);

    const auto tr = drift_probe(OffspringLaw::frechet(1.0, 1.0), nu1, {1e4}, 0.1, 10.0, 100000, 2);
    CHECK(tr[0].drift + 4.0 * tr[0].std_error >= 0.0);
}
