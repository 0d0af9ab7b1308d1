#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace covx {

/// p x n observation matrix. Column t is the observation vector x_t.
///
/// Storage is observation-major: the p entries of x_t are contiguous, which
/// is the access pattern of the rank-one Gram accumulation.
class DataMatrix {
public:
    DataMatrix() = default;
    DataMatrix(std::size_t p, std::size_t n);

    /// Builds from p rows of length n (row i = variable i over all observations).
    static DataMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t p() const noexcept { return p_; }
    std::size_t n() const noexcept { return n_; }

    double& operator()(std::size_t i, std::size_t t) noexcept { return data_[t * p_ + i]; }
    double operator()(std::size_t i, std::size_t t) const noexcept { return data_[t * p_ + i]; }

    std::span<const double> observation(std::size_t t) const noexcept { return {data_.data() + t * p_, p_}; }
    std::span<double> observation(std::size_t t) noexcept { return {data_.data() + t * p_, p_}; }

    std::span<const double> raw() const noexcept { return data_; }
    std::span<double> raw() noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

private:
    std::size_t p_ = 0;
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Dense symmetric p x p matrix with both triangles stored.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t p, double fill = 0.0) : p_(p), data_(p * p, fill) {}

    static SymMatrix identity(std::size_t p);

    std::size_t p() const noexcept { return p_; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * p_ + j]; }
    /// Writes both (i, j) and (j, i).
    void set(std::size_t i, std::size_t j, double v) noexcept {
        data_[i * p_ + j] = v;
        data_[j * p_ + i] = v;
    }

    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * p_, p_}; }
    std::span<const double> raw() const noexcept { return data_; }
    std::span<double> raw() noexcept { return data_; }

    bool is_symmetric() const noexcept;

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

private:
    std::size_t p_ = 0;
    std::vector<double> data_;
};

/// Non-normalized sample covariance S = sum_t x_t x_t^T.
using GramMatrix = SymMatrix;

}  // namespace covx
