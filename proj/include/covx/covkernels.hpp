#pragma once

// Deterministic matrix kernels: Gram and correlation entries, hypercubic
// tensor entries, normalized point clouds, extreme off-diagonal selection
// and the spectral norm of symmetric matrices.
//
// Indices are 0-based throughout the library. Only the upper triangle
// i < j is enumerated, in lexicographic order.

#include "covx/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace covx::kernels {

/// One atom of a normalized point process. Off-diagonal points carry i < j;
/// diagonal points carry i == j.
struct NormedPoint {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double value = 0.0;

    friend bool operator==(const NormedPoint&, const NormedPoint&) = default;
};

/// Atom indexed by a strictly increasing m-tuple (hypercubic tensors).
struct TuplePoint {
    std::vector<std::uint32_t> index;
    double value = 0.0;
};

struct RankedEntry {
    double value = 0.0;
    std::uint32_t i = 0;
    std::uint32_t j = 0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// The k most extreme off-diagonal entries, most extreme first. For the
/// upper list values are non-increasing; for the lower list non-decreasing.
/// Equal values are ordered by lexicographically smallest (i, j).
struct OrderStats {
    std::size_t k = 0;
    std::vector<RankedEntry> entries;

    std::vector<double> values() const;
};

struct Extremes {
    OrderStats top;
    OrderStats bottom;
};

/// S_ij = sum_t X_it X_jt. Accumulated in row tiles as a sequence of rank-one
/// updates, so each entry is summed over t in natural order.
GramMatrix gram(const DataMatrix& x);

/// R_ij = S_ij / sqrt(S_ii S_jj) with unit diagonal and entries clamped to
/// [-1, 1]. Throws DomainError if any S_ii == 0.
SymMatrix correlation(const GramMatrix& s);

/// sum_t X_{i1 t} ... X_{im t} for a strictly increasing tuple of row indices.
double tensor_entry(const DataMatrix& x, std::span<const std::size_t> idx);

/// d~_p (S_ij / sqrt(n) - d~_p) for every pair i < j. Requires p >= 3.
std::vector<NormedPoint> normalized_offdiag_points(const GramMatrix& s, std::size_t n);

/// d~_p (sqrt(n) R_ij - d~_p) for every pair i < j. Requires p >= 3.
std::vector<NormedPoint> normalized_corr_points(const SymMatrix& r, std::size_t n);

/// S_ij^2 / (2n) - d~_p^2 / 2 - log 2 for every pair i < j. Requires p >= 3.
std::vector<NormedPoint> squared_points(const GramMatrix& s, std::size_t n);

/// The diagonal S_ii = sum_t X_it^2 alone, in O(pn).
std::vector<double> gram_diagonal(const DataMatrix& x);

/// d_p ((S_ii - n) / sqrt(n var_x2) - d_p) for every i, with d_p at count p.
std::vector<NormedPoint> diagonal_points(const GramMatrix& s, std::size_t n, double var_x2);
std::vector<NormedPoint> diagonal_points(std::span<const double> diag, std::size_t n, double var_x2);

/// (S_ii - n) / a_np^2 for every i.
std::vector<NormedPoint> heavy_tail_diag_points(const GramMatrix& s, std::size_t n, double a_np);
std::vector<NormedPoint> heavy_tail_diag_points(std::span<const double> diag, std::size_t n, double a_np);

/// d_{p,m} (S^{(m)}_{i1..im} / sqrt(n) - d_{p,m}) over all strictly increasing
/// m-tuples. The enumeration is binom(p, m) long; meant for small p.
std::vector<TuplePoint> normalized_tensor_points(const DataMatrix& x, unsigned m);

/// Top-k and bottom-k off-diagonal entries using bounded selection
/// (O(p^2 log k), no full sort). Requires 1 <= k <= p(p-1)/2.
Extremes offdiag_extremes(const SymMatrix& m, std::size_t k);

struct PowerIterationOptions {
    double tol = 1e-8;
    std::size_t max_iter = 20000;
};

/// Largest absolute eigenvalue of a symmetric matrix via power iteration on
/// M^2. The start vector is the normalized alternating-sign vector; if M
/// annihilates the iterate a rotated start vector is used. Throws
/// NonConvergenceError after max_iter iterations.
double operator_norm(const SymMatrix& m, const PowerIterationOptions& opts = {});

}  // namespace covx::kernels
