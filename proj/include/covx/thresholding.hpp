#pragma once

// Hard-threshold estimators of the covariance and correlation matrices and
// their operator-norm consistency metric.

#include "covx/matrix.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace covx::thresholding {

enum class EstimateKind { cov, corr };

/// t_n = C sqrt(log p / n).
struct ThresholdSpec {
    double C = 2.5;
    std::size_t n = 0;
    std::size_t p = 0;
    double t_n = 0.0;

    /// Requires C > 0, n >= 1, p >= 2 (so that t_n > 0).
    static ThresholdSpec make(double C, std::size_t n, std::size_t p);
};

struct ThresholdEstimate {
    SymMatrix matrix;
    std::vector<std::string> warnings;
};

/// S_ij 1(|S_ij| > n t_n), every entry including the diagonal.
ThresholdEstimate threshold_cov(const SymMatrix& s, const ThresholdSpec& spec);

/// R_ij 1(|R_ij| > t_n), every entry including the diagonal. Warns when
/// t_n >= 1, since the unit diagonal is then zeroed as well.
ThresholdEstimate threshold_corr(const SymMatrix& r, const ThresholdSpec& spec);

/// sqrt(n/p) ||n^{-1} S_hat - I|| (cov) or sqrt(n/p) ||R_hat - I|| (corr).
double consistency_metric(const SymMatrix& estimate, EstimateKind kind, std::size_t n, std::size_t p);

}  // namespace covx::thresholding
