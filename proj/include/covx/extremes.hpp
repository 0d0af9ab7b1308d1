#pragma once

// Test statistics built from the extreme off-diagonal entries and the laws
// of their limits.
//
// Two threshold families live here and must not be mixed: jiang_quantile()
// belongs to the non-standard Gumbel limit of n W_n^2 - 4 log p + log log p,
// while spacing and region tests are calibrated against functionals of the
// limiting Poisson points (-log Gamma_1, ..., -log Gamma_k).

#include "covx/covkernels.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace covx::extremes {

enum class StatMode { covariance, correlation };

/// Right-tail decision; reject iff statistic >= threshold.
struct TestDecision {
    double statistic = 0.0;
    double threshold = 0.0;
    double alpha = 0.0;
    bool reject = false;
};

enum class SpacingKind { T1, T2, T3 };

struct SpacingSpec {
    SpacingKind kind = SpacingKind::T1;
    std::size_t k = 2;
};

std::string to_string(SpacingKind kind);
SpacingKind spacing_kind_from_string(const std::string& name);

/// One draw of (-log Gamma_1, ..., -log Gamma_k); strictly decreasing.
struct LimitLawSample {
    std::vector<double> values;
};

/// n * maxabs^2 - 4 log p + log log p. `maxabs` is W_n = max|S_ij| / n in
/// covariance mode and L_n = max|R_ij| in correlation mode. Requires p >= 3.
double jiang_statistic(double maxabs, std::size_t n, std::size_t p, StatMode mode);

TestDecision jiang_test(double statistic, double alpha);

/// T_k^(1) = d~ (S_(1) - S_(k)) / sqrt(n)
/// T_k^(2) = d~ max_i (S_(i) - S_(i+1)) / sqrt(n)
/// T_k^(3) = sum_i (d~ (S_(i) - S_(i+1)) / sqrt(n))^2
/// `top` holds the largest values in descending order (at least k of them).
double spacing_statistic(std::span<const double> top, std::size_t n, std::size_t p, SpacingSpec spec);
double spacing_statistic(const kernels::OrderStats& top, std::size_t n, std::size_t p, SpacingSpec spec);

/// d~_p (S_(i) / sqrt(n) - d~_p) for the given descending top values.
std::vector<double> normalized_top_points(std::span<const double> top, std::size_t n, std::size_t p);

/// `count` iid draws of (-log Gamma_1, ..., -log Gamma_k) from stream
/// (seed, kLimitVectorStream).
std::vector<LimitLawSample> sample_limit_vector(std::size_t k, std::size_t count, std::uint64_t seed);

/// Limit functional of a spacing statistic evaluated on the order statistics
/// of k uniforms given in descending order U_(1) >= ... >= U_(k).
double spacing_limit_functional(SpacingKind kind, std::span<const double> uniforms_desc);

/// (1 - alpha)-quantile of the limit of T_k^(kind), estimated from mc_count
/// Monte Carlo draws. Results are cached per (kind, k, alpha, mc_count,
/// seed). Requires mc_count >= 10^4.
double spacing_limit_quantile(SpacingSpec spec, double alpha, std::size_t mc_count, std::uint64_t seed);

struct QuantileTableRow {
    SpacingKind kind = SpacingKind::T1;
    std::size_t k = 0;
    double alpha = 0.0;
    std::size_t mc_count = 0;
    std::uint64_t seed = 0;
    double value = 0.0;
};

/// Snapshot of the cached quantiles, sorted by key.
std::vector<QuantileTableRow> quantile_table();

using Region = std::function<bool(std::span<const double>)>;

/// Axis-aligned rectangle in R^k.
struct RectRegion {
    std::vector<double> lower;
    std::vector<double> upper;
    double alpha = 0.0;
    double band_level = 0.0;    // per-coordinate two-sided tail mass after the search
    double coverage = 0.0;      // joint coverage on the calibration draws
    std::size_t draws = 0;
    std::uint64_t seed = 0;

    bool contains(std::span<const double> v) const;
    Region as_region() const;
};

/// Default region A_k^alpha: per-coordinate quantile bands of the limit
/// vector starting from a Bonferroni split alpha / k, with the band level
/// tuned by bisection until the joint coverage on `draws` limit samples is
/// 1 - alpha within `coverage_tol`.
RectRegion calibrate_default_region(std::size_t k, double alpha, std::size_t draws, std::uint64_t seed,
                                    double coverage_tol = 0.002);

/// Rejects iff the observed normalized top-k vector lies outside `region`.
/// statistic is the outside indicator and threshold is 1.
TestDecision region_test(std::span<const double> points, const Region& region, double alpha);

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double empirical_quantile(std::span<const double> sorted, double prob);

}  // namespace covx::extremes
