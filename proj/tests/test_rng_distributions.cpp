#include "covx/distributions.hpp"
#include "covx/errors.hpp"
#include "covx/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace covx;
using namespace covx::rng;
using namespace covx::sim;

TEST_CASE("philox4x32-10 known answers") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("stream is random access") {
    RandomStream s(0x1234567890abcdefull, 42);
    for (std::uint64_t k = 0; k < 100; ++k) {
        CHECK(s.position() == k);
        CHECK(s() == word_at(0x1234567890abcdefull, 42, k));
    }
    RandomStream a(7, 0), b(7, 0), c(7, 1), d(8, 0);
    bool differs_stream = false, differs_seed = false;
    for (int i = 0; i < 16; ++i) {
        const auto va = a();
        CHECK(va == b());
        differs_stream |= va != c();
        differs_seed |= va != d();
    }
    CHECK(differs_stream);
    CHECK(differs_seed);
}

TEST_CASE("uniform ranges") {
    RandomStream s(3, 3);
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        const double v = s.uniform_open();
        CHECK_UNARY(u >= 0.0 && u < 1.0);
        CHECK_UNARY(v > 0.0 && v < 1.0);
    }
}

TEST_CASE("adjacent replicate streams are uncorrelated") {
    const std::size_t m = 1000000;
    for (std::uint64_t r : {0ull, 1ull, 999ull}) {
        RandomStream a(99, r), b(99, r + 1);
        double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = a.uniform(), y = b.uniform();
            sab += x * y;
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
        }
        const double cov = sab / m - (sa / m) * (sb / m);
        const double corr = cov / std::sqrt((saa / m - (sa / m) * (sa / m)) * (sbb / m - (sb / m) * (sb / m)));
        CAPTURE(r);
        CHECK(std::fabs(corr) <= 3.0 / std::sqrt(double(m)));
    }
}

TEST_CASE("family tags") {
    CHECK(DistributionSpec::rademacher().var_x2 == 0.0);
    CHECK(DistributionSpec::gaussian().var_x2 == 2.0);
    CHECK(DistributionSpec::uniform_scaled().var_x2 == doctest::Approx(0.8));
    CHECK(DistributionSpec::laplace_scaled().var_x2 == doctest::Approx(5.0));
    CHECK(DistributionSpec::student_t(9).var_x2 == doctest::Approx(16.0 / 5.0));
    CHECK(std::isinf(DistributionSpec::student_t(4).var_x2));
    CHECK(std::isinf(DistributionSpec::sym_pareto(3).var_x2));
    for (auto spec : {DistributionSpec::gaussian(), DistributionSpec::uniform_scaled(), DistributionSpec::laplace_scaled(),
                      DistributionSpec::student_t(5), DistributionSpec::sym_pareto(3)})
        CHECK(spec.var_x2 > 0.0);

    CHECK(DistributionSpec::student_t(5).moment_class.has_moment(4.9));
    CHECK_FALSE(DistributionSpec::student_t(5).moment_class.has_moment(5.0));
    CHECK(DistributionSpec::sym_pareto(3).regularly_varying());
    CHECK_FALSE(DistributionSpec::student_t(3).regularly_varying());
    CHECK(DistributionSpec::gaussian().moment_class.has_moment(1000.0));
    CHECK_THROWS_AS(DistributionSpec::student_t(2.0), DomainError);
    CHECK_THROWS_AS(DistributionSpec::sym_pareto(1.5), DomainError);
    CHECK_THROWS_AS(DistributionSpec::from_name("cauchy", 0), DomainError);
    CHECK(DistributionSpec::from_name("student_t", 7).param == 7.0);
}

TEST_CASE("rademacher entries") {
    const auto x = sample_matrix(DistributionSpec::rademacher(), 13, 77, 5);
    std::size_t plus = 0;
    for (double v : x.raw()) {
        CHECK_UNARY(v == 1.0 || v == -1.0);
        plus += v > 0;
    }
    CHECK(plus > 400);
    CHECK(plus < 600);
}

TEST_CASE("sampling is deterministic") {
    for (auto spec : {DistributionSpec::gaussian(), DistributionSpec::rademacher(), DistributionSpec::uniform_scaled(),
                      DistributionSpec::laplace_scaled(), DistributionSpec::student_t(5), DistributionSpec::sym_pareto(3)}) {
        CAPTURE(spec.name());
        CHECK(sample_matrix(spec, 9, 31, 1234) == sample_matrix(spec, 9, 31, 1234));
        CHECK_FALSE(sample_matrix(spec, 9, 31, 1234) == sample_matrix(spec, 9, 31, 1235));
    }
}

TEST_CASE("standardization: mean 0, variance 1") {
    struct Case {
        DistributionSpec spec;
        double mean_band;
        double var_band;
    };
    // Gaussian bands are 3 sigma at 10^6 draws; heavier tails get wider bands.
    const Case cases[] = {
        {DistributionSpec::gaussian(), 0.004, 0.006},   {DistributionSpec::uniform_scaled(), 0.004, 0.004},
        {DistributionSpec::laplace_scaled(), 0.004, 0.01}, {DistributionSpec::student_t(9), 0.004, 0.02},
        {DistributionSpec::rademacher(), 0.004, 1e-15},
    };
    for (const auto& c : cases) {
        const auto x = sample_matrix(c.spec, 1000, 1000, 77);
        double s = 0, ss = 0;
        for (double v : x.raw()) {
            s += v;
            ss += v * v;
        }
        const double m = s / 1e6;
        CAPTURE(c.spec.name());
        CHECK(std::fabs(m) <= c.mean_band);
        CHECK(std::fabs(ss / 1e6 - 1.0) <= c.var_band + m * m);
    }
}

TEST_CASE("uniform and laplace shapes") {
    const auto u = sample_matrix(DistributionSpec::uniform_scaled(), 100, 1000, 3);
    const double r = std::sqrt(3.0);
    for (double v : u.raw()) CHECK_UNARY(std::fabs(v) <= r);

    // Laplace with b = 1/sqrt(2): P(|X| > 1) = exp(-sqrt 2).
    const auto l = sample_matrix(DistributionSpec::laplace_scaled(), 1000, 1000, 4);
    const double frac = double(std::count_if(l.raw().begin(), l.raw().end(), [](double v) { return std::fabs(v) > 1.0; })) / 1e6;
    CHECK(std::fabs(frac - std::exp(-std::sqrt(2.0))) < 0.002);
}

TEST_CASE("pareto tail matches the quantile function") {
    const auto spec = DistributionSpec::sym_pareto(3);
    const auto x = sample_matrix(spec, 1000, 1000, 8);
    for (double u : {0.5, 0.9, 0.99, 0.999}) {
        const double q = spec.abs_quantile(u);
        const double frac =
            double(std::count_if(x.raw().begin(), x.raw().end(), [q](double v) { return std::fabs(v) > q; })) / 1e6;
        CAPTURE(u);
        CHECK(std::fabs(frac - (1.0 - u)) < 4.0 * std::sqrt(u * (1.0 - u) / 1e6));
    }
    std::size_t neg = std::count_if(x.raw().begin(), x.raw().end(), [](double v) { return v < 0.0; });
    CHECK(std::fabs(double(neg) / 1e6 - 0.5) < 0.002);
}

TEST_CASE("student t tail") {
    // t_5 scaled by sqrt(3/5): P(|T| > 2.015048) = 0.1 for the unscaled law.
    const auto x = sample_matrix(DistributionSpec::student_t(5), 1000, 1000, 9);
    const double q = 2.0150483733330233 * std::sqrt(3.0 / 5.0);
    const double frac =
        double(std::count_if(x.raw().begin(), x.raw().end(), [q](double v) { return std::fabs(v) > q; })) / 1e6;
    CHECK(std::fabs(frac - 0.1) < 0.0015);
}

TEST_CASE("a_k levels") {
    const auto pure = [](double u) { return std::pow(1.0 - u, -1.0 / 3.0); };
    CHECK(a_quantile(pure, 1000) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(a_quantile(pure, 1) == 1.0);
    const auto spec = DistributionSpec::sym_pareto(3);
    const double sigma = std::sqrt(1.0 / 3.0);
    CHECK(a_quantile(spec, 1000) == doctest::Approx(10.0 * sigma).epsilon(1e-12));
    CHECK(a_quantile(spec, 1) == doctest::Approx(sigma));
    CHECK_THROWS_AS(a_quantile(DistributionSpec::gaussian(), 1000), DomainError);
    CHECK_THROWS_AS(a_quantile(pure, 0.5), DomainError);

    const double a = solve_tail_level([](double v) { return std::pow(v, -3.0); }, 1000, 1.0, 1e6);
    CHECK(a == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("scalar samplers") {
    RandomStream s(12, 0);
    double sum_e = 0, sum_g = 0, sum_z = 0;
    const int m = 200000;
    for (int i = 0; i < m; ++i) {
        sum_e += sample_exponential(s);
        sum_g += sample_gumbel(s);
        sum_z += sample_standard_normal(s);
    }
    CHECK(std::fabs(sum_e / m - 1.0) < 0.01);
    CHECK(std::fabs(sum_g / m - 0.5772156649) < 0.01);
    CHECK(std::fabs(sum_z / m) < 0.01);
}
