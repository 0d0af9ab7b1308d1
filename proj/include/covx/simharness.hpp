#pragma once

// Seeded, parallel Monte Carlo engine for the point-process limit theorems.
//
// Replicate r of an experiment draws its data from the counter-based stream
// (master_seed, r). Replicates run on a pool of workers and are written to
// slots indexed by r; every aggregate is then computed sequentially in
// replicate order, so summaries are bit-identical for any worker count.

#include "covx/distributions.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace covx::sim {

enum class Functional {
    pp_counts,      // window counts of d~(S_ij/sqrt n - d~) vs the mean measure
    max_gumbel,     // largest normalized entry (S and R) vs Lambda, growth-rate medians
    joint_max_min,  // joint cells of normalized max/min vs Lambda(x)(1 - Lambda(-y))
    squares,        // window counts of S_ij^2/(2n) - d~^2/2 - log 2
    diag_gumbel,    // diagonal points d_p((S_ii - n)/sqrt(n Var X^2) - d_p), light tails
    diag_frechet,   // a_np^{-2} max(S_ii - n) vs Frechet(alpha/2), regularly varying tails
    random_walk,    // iid row sums d_p(S_n^(i)/sqrt n - d_p)
    corr_variants,  // window counts of d~(sqrt n R_ij - d~)
    ld_ratio,       // P(S_n/sqrt n > y) against the normal tail on a y-grid
    rate_check,     // sqrt(n/p) ||thresholded estimate - I|| (consistency rate)
    test_size       // rejection rates of the independence tests under iid data
};

std::string to_string(Functional f);
Functional functional_from_string(const std::string& name);

struct Window {
    double a = 0.0;
    double b = std::numeric_limits<double>::infinity();
};

struct GridPoint {
    double x = 0.0;
    double y = 0.0;
};

struct ExperimentConfig {
    DistributionSpec spec = DistributionSpec::gaussian();
    std::size_t p = 0;
    std::size_t n = 0;
    std::size_t replicates = 0;
    std::uint64_t master_seed = 0;
    std::vector<Functional> functionals;

    std::vector<Window> windows{{0.0, std::numeric_limits<double>::infinity()},
                                {1.0, std::numeric_limits<double>::infinity()}};
    std::vector<GridPoint> cells{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    std::vector<double> ld_grid{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    std::vector<double> alphas{0.01, 0.05, 0.10};
    std::size_t k = 2;
    double threshold_C = 2.5;

    // Limit-law calibration for spacing and region tests.
    std::uint64_t calibration_seed = 0;
    std::size_t calibration_draws = 200000;
    std::size_t region_check_draws = 10000;

    // Tolerances recorded next to targets in the summaries.
    double tol_window = 0.15;
    double tol_ks = 0.10;
    double tol_cell = 0.07;
    double tol_rate_median = 0.25;

    std::size_t memory_cap_bytes = std::size_t{4} << 30;
};

/// Validates ranges; throws DomainError.
void validate(const ExperimentConfig& config);

/// Peak working set per worker in bytes.
std::size_t working_set_bytes(const ExperimentConfig& config);

/// Growth-rate conditions of the limit theorems, reported as warnings when
/// (p, n) lies outside the regime suggested by the entry law's moment class.
std::vector<std::string> growth_warnings(const ExperimentConfig& config);

struct WindowRow {
    std::string label;
    double a = 0.0;
    double b = 0.0;
    double mean_count = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    double exact_target = std::numeric_limits<double>::quiet_NaN();  // finite-p value when known
    double exact_sd = std::numeric_limits<double>::quiet_NaN();      // sd of the mean under the exact law
};

struct KsRow {
    std::string label;
    std::string reference;
    double statistic = 0.0;
    std::size_t sample_size = 0;
    double tolerance = 0.0;
};

struct QuantileRow {
    std::string label;
    double prob = 0.0;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
};

struct RateRow {
    std::string label;
    double alpha = 0.0;
    double threshold = 0.0;
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t trials = 0;
};

struct CellRow {
    std::string label;
    double x = 0.0;
    double y = 0.0;
    double empirical = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
};

struct RatioRow {
    double y = 0.0;
    double empirical_tail = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double normal_tail = 0.0;
    double ratio = 0.0;
    std::size_t draws = 0;
};

/// Per-replicate statistic, in replicate order.
struct Series {
    std::string name;
    std::vector<double> values;
};

struct MCSummary {
    Functional functional = Functional::pp_counts;
    std::vector<WindowRow> windows;
    std::vector<KsRow> ks;
    std::vector<QuantileRow> quantiles;
    std::vector<RateRow> rates;
    std::vector<CellRow> cells;
    std::vector<RatioRow> ratios;
    std::vector<Series> series;
    std::vector<std::string> notes;
    double runtime_seconds = 0.0;

    const Series* find_series(const std::string& name) const;
    const KsRow* find_ks(const std::string& label) const;
};

/// Kolmogorov-Smirnov distance between the empirical cdf of `sorted`
/// (ascending) and `cdf`.
double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Runs `body(r)` for r in [0, count) on `workers` threads. Exceptions are
/// rethrown on the calling thread (the first one raised wins).
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

// Single-functional entry points. Each one runs its own replicates.
MCSummary run_pp_experiment(const ExperimentConfig& config, std::size_t workers = 1);
MCSummary run_max_experiment(const ExperimentConfig& config, std::size_t workers = 1);
MCSummary run_random_walk_experiment(const ExperimentConfig& config, std::size_t workers = 1);
MCSummary run_diag_experiments(const ExperimentConfig& config, bool heavy_tail, std::size_t workers = 1);
MCSummary run_ld_ratio(const ExperimentConfig& config, std::size_t workers = 1);
MCSummary run_test_size(const ExperimentConfig& config, std::size_t workers = 1);

/// Runs every functional in config.functionals. Functionals computed from the
/// off-diagonal entries share a single pass over the replicates. Refuses
/// with ResourceError when working_set_bytes * workers exceeds the cap.
std::vector<MCSummary> run_experiment(const ExperimentConfig& config, std::size_t workers = 1);

}  // namespace covx::sim
