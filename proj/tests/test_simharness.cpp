#include "covx/covkernels.hpp"
#include "covx/errors.hpp"
#include "covx/io.hpp"
#include "covx/norming.hpp"
#include "covx/simharness.hpp"

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>

using namespace covx;
using namespace covx::sim;

namespace {

ExperimentConfig small_config(std::vector<Functional> fs) {
    ExperimentConfig c;
    c.p = 20;
    c.n = 60;
    c.replicates = 40;
    c.master_seed = 424242;
    c.calibration_seed = 1;
    c.calibration_draws = 20000;
    c.region_check_draws = 2000;
    c.functionals = std::move(fs);
    return c;
}

std::string csv_bytes(const std::vector<MCSummary>& sums) {
    std::string out;
    for (const auto& s : sums) out += io::summary_csv(s) + io::series_csv(s);
    return out;
}

}  // namespace

TEST_CASE("ks statistic") {
    const std::vector<double> one{0.0};
    CHECK(ks_statistic(one, [](double) { return 0.5; }) == 0.5);

    const std::size_t m = 50;
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = norming::gumbel_quantile((i + 0.5) / m);
    CHECK(ks_statistic(q, norming::gumbel_cdf) == doctest::Approx(0.5 / m).epsilon(1e-9));

    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u;
    std::vector<double> v(100000);
    for (auto& x : v) x = u(gen);
    std::sort(v.begin(), v.end());
    const double d = ks_statistic(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(d >= 0.0);
    CHECK(d < 0.01);
    CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, norming::gumbel_cdf), DomainError);
}

TEST_CASE("wilson interval") {
    const auto [lo, hi] = wilson_interval(50, 1000);
    CHECK(lo < 0.05);
    CHECK(hi > 0.05);
    CHECK(lo == doctest::Approx(0.03813).epsilon(1e-3));
    CHECK(hi == doctest::Approx(0.06531).epsilon(1e-3));
    CHECK(wilson_interval(0, 10).first == 0.0);
    CHECK(wilson_interval(10, 10).second == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
    for (std::size_t workers : {1ul, 3ul, 8ul}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), workers, [&](std::size_t r) { hits[r]++; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t r) {
                                     if (r == 37) throw DomainError("boom");
                                 }),
                    DomainError);
}

TEST_CASE("functional names round-trip") {
    for (int f = 0; f <= static_cast<int>(Functional::test_size); ++f)
        CHECK(functional_from_string(to_string(static_cast<Functional>(f))) == static_cast<Functional>(f));
    CHECK_THROWS_AS(functional_from_string("nope"), DomainError);
}

TEST_CASE("validation and resources") {
    auto c = small_config({Functional::pp_counts});
    c.p = 2;
    CHECK_THROWS_AS(validate(c), DomainError);
    c = small_config({});
    CHECK_THROWS_AS(validate(c), DomainError);
    c = small_config({Functional::pp_counts});
    c.replicates = 0;
    CHECK_THROWS_AS(validate(c), DomainError);
    c = small_config({Functional::test_size});
    c.alphas = {0.0};
    CHECK_THROWS_AS(validate(c), DomainError);

    c = small_config({Functional::pp_counts});
    c.memory_cap_bytes = working_set_bytes(c) * 4 - 1;
    CHECK_NOTHROW(run_experiment(c, 1));
    CHECK_THROWS_AS(run_experiment(c, 4), ResourceError);
    CHECK(working_set_bytes(c) >= c.p * c.p * sizeof(double));
}

TEST_CASE("diag_gumbel refuses rademacher, diag_frechet refuses light tails") {
    auto c = small_config({Functional::diag_gumbel});
    c.spec = DistributionSpec::rademacher();
    CHECK_THROWS_AS(run_experiment(c), DomainError);
    c.functionals = {Functional::diag_frechet};
    c.spec = DistributionSpec::gaussian();
    CHECK_THROWS_AS(run_experiment(c), DomainError);
}

TEST_CASE("summaries are independent of the worker count") {
    auto c = small_config({Functional::pp_counts, Functional::max_gumbel, Functional::joint_max_min,
                           Functional::squares, Functional::corr_variants, Functional::rate_check,
                           Functional::test_size, Functional::random_walk, Functional::diag_gumbel,
                           Functional::ld_ratio});
    const std::string one = csv_bytes(run_experiment(c, 1));
    CHECK(csv_bytes(run_experiment(c, 4)) == one);
    CHECK(csv_bytes(run_experiment(c, 8)) == one);
    c.master_seed += 1;
    CHECK(csv_bytes(run_experiment(c, 1)) != one);
}

TEST_CASE("window counts are additive per replicate") {
    auto c = small_config({Functional::pp_counts});
    c.windows = {{-1.0, 0.5}, {0.5, 2.0}, {-1.0, 2.0}};
    const auto s = run_pp_experiment(c);
    const auto* a = s.find_series("count (-1,0.5]");
    const auto* b = s.find_series("count (0.5,2]");
    const auto* ab = s.find_series("count (-1,2]");
    REQUIRE(a);
    REQUIRE(b);
    REQUIRE(ab);
    for (std::size_t r = 0; r < c.replicates; ++r) CHECK(a->values[r] + b->values[r] == ab->values[r]);
    CHECK(s.windows[0].target == doctest::Approx(norming::mean_measure(-1.0, 0.5)));
}

TEST_CASE("rademacher data: correlation and covariance clouds coincide") {
    auto c = small_config({Functional::pp_counts, Functional::corr_variants});
    c.spec = DistributionSpec::rademacher();
    c.windows = {{-2.0, INFINITY}, {0.0, INFINITY}, {1.0, INFINITY}};
    const auto sums = run_experiment(c);
    for (std::size_t w = 0; w < c.windows.size(); ++w)
        CHECK(sums[0].windows[w].mean_count == sums[1].windows[w].mean_count);
}

TEST_CASE("max statistics: min of S is minus the max of -S") {
    auto c = small_config({Functional::max_gumbel});
    const auto s = run_max_experiment(c);
    const auto* mx = s.find_series("cov_max");
    const auto* mn = s.find_series("cov_min");
    REQUIRE(mx);
    REQUIRE(mn);
    // Replicate 0 rebuilt from its stream.
    rng::RandomStream stream(c.master_seed, 0);
    const auto x = sample_matrix(c.spec, c.p, c.n, stream);
    const auto s0 = kernels::gram(x);
    SymMatrix neg(c.p);
    for (std::size_t i = 0; i < c.p; ++i)
        for (std::size_t j = i; j < c.p; ++j) neg.set(i, j, -s0(i, j));
    const double d = norming::tilde_d_p(c.p);
    const double rn = std::sqrt(double(c.n));
    const double neg_max = kernels::offdiag_extremes(neg, 1).top.entries[0].value;
    CHECK(mn->values[0] == doctest::Approx(-(d * (neg_max / rn - d))).epsilon(1e-12));
    CHECK(s.cells.size() == 8);
}

TEST_CASE("gaussian random walk: exact binomial target") {
    ExperimentConfig c;
    c.p = 10000;
    c.n = 1;
    c.replicates = 300;
    c.master_seed = 5;
    c.functionals = {Functional::random_walk};
    c.windows = {{0.0, INFINITY}};
    const auto s = run_random_walk_experiment(c);
    const auto& row = s.windows[0];
    CHECK(row.exact_target == doctest::Approx(1e4 * norming::std_normal_tail(norming::d_p(10000))).epsilon(1e-12));
    CHECK(std::fabs(row.mean_count - row.exact_target) <= 3.0 * row.exact_sd);
}

TEST_CASE("ld ratio: gaussian sums are exactly normal") {
    ExperimentConfig c;
    c.p = 500;
    c.n = 4;
    c.replicates = 200;
    c.master_seed = 6;
    c.functionals = {Functional::ld_ratio};
    c.ld_grid = {0.0, 1.0, 2.0};
    const auto s = run_ld_ratio(c);
    REQUIRE(s.ratios.size() == 3);
    CHECK(s.ratios[0].normal_tail == 0.5);
    for (const auto& r : s.ratios) {
        const double sd = std::sqrt(r.normal_tail * (1 - r.normal_tail) / r.draws);
        CHECK(std::fabs(r.empirical_tail - r.normal_tail) <= 3.0 * sd);
    }
}

TEST_CASE("test size rates are monotone in alpha") {
    auto c = small_config({Functional::test_size});
    c.replicates = 60;
    const auto s = run_test_size(c);
    std::map<std::string, double> prev;
    for (const auto& r : s.rates) {
        CHECK(r.rate >= 0.0);
        CHECK(r.rate <= 1.0);
        if (prev.count(r.label)) CHECK(r.rate >= prev[r.label]);
        prev[r.label] = r.rate;
    }
}

TEST_CASE("growth warnings") {
    auto c = small_config({Functional::pp_counts});
    c.spec = DistributionSpec::student_t(5);
    c.p = 1000;
    c.n = 100;
    CHECK_FALSE(growth_warnings(c).empty());
    c.spec = DistributionSpec::gaussian();
    c.p = 50;
    c.n = 1000;
    CHECK(growth_warnings(c).empty());
    c.functionals = {Functional::rate_check};
    c.threshold_C = 1.5;
    CHECK_FALSE(growth_warnings(c).empty());
}
