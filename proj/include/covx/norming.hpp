#pragma once

// Normalizing constants, tail functions and limit laws for the extreme
// off-diagonal entries of sample covariance and correlation matrices.
//
// All functions are pure and reentrant.

#include <cstdint>

namespace covx::norming {

/// Standard normal survival function 1 - Phi(x), evaluated through erfc so
/// that the far right tail keeps full relative precision. Underflows to 0
/// beyond x ~ 37.5; use std_normal_tail_wide() there.
double std_normal_tail(double x);

/// Same as std_normal_tail() in the widest native floating format; keeps
/// relative precision out to |x| = 40 and beyond.
long double std_normal_tail_wide(long double x);

/// The centering/scaling constant for `count` points:
///   sqrt(2 log c) - (log log c + log 4 pi) / (2 sqrt(2 log c)).
/// Requires count >= 2 (log log c is negative for c < e, but finite).
long double norming_constant(long double count);

/// d_p for p >= 2.
double d_p(std::uint64_t p);

/// d evaluated at the number of off-diagonal pairs p(p-1)/2; p >= 3.
double tilde_d_p(std::uint64_t p);

/// d evaluated at binom(p, m), the number of strictly increasing m-tuples.
/// Requires binom(p, m) >= 2.
double d_p_m(std::uint64_t p, unsigned m);

/// binom(p, m) in long double. Exact while the result fits in 64 bits.
long double binomial(std::uint64_t p, unsigned m);

struct NormingSchedule {
    long double count = 0;
    double value = 0;

    static NormingSchedule at(long double count);
    static NormingSchedule pairs(std::uint64_t p);
    static NormingSchedule tuples(std::uint64_t p, unsigned m);
};

// Standard Gumbel law Lambda(x) = exp(-e^{-x}).
double gumbel_cdf(double x);
double gumbel_quantile(double u);

/// Standard Frechet cdf exp(-x^{-shape}) for x > 0, 0 otherwise.
double frechet_cdf(double x, double shape);

/// Limit law of n W_n^2 - 4 log p + log log p: exp(-e^{-x/2} / sqrt(8 pi)).
double jiang_limit_cdf(double x);

/// (1 - alpha)-quantile of jiang_limit_cdf: -log(8 pi) - 2 log log (1-alpha)^{-1}.
double jiang_quantile(double alpha);

/// Mean measure of the limiting Poisson process on (a, b]; b may be +inf.
double mean_measure(double a, double b);

}  // namespace covx::norming
