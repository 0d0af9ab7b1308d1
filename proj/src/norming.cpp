#include "covx/norming.hpp"

#include "covx/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace covx::norming {

namespace {

constexpr long double kSqrt2 = 1.41421356237309504880168872420969808L;
constexpr long double kPi = 3.14159265358979323846264338327950288L;

}  // namespace

long double std_normal_tail_wide(long double x) {
    return 0.5L * std::erfc(x / kSqrt2);
}

double std_normal_tail(double x) {
    return static_cast<double>(std_normal_tail_wide(static_cast<long double>(x)));
}

long double norming_constant(long double count) {
    if (!(count >= 2.0L))
        throw DomainError("norming constant requires at least 2 points, got " + std::to_string(static_cast<double>(count)));
    const long double log_c = std::log(count);
    const long double root = std::sqrt(2.0L * log_c);
    return root - (std::log(log_c) + std::log(4.0L * kPi)) / (2.0L * root);
}

double d_p(std::uint64_t p) {
    if (p < 2) throw DomainError("d_p requires p >= 2");
    return static_cast<double>(norming_constant(static_cast<long double>(p)));
}

double tilde_d_p(std::uint64_t p) {
    if (p < 3) throw DomainError("tilde_d_p requires p >= 3");
    return static_cast<double>(norming_constant(binomial(p, 2)));
}

long double binomial(std::uint64_t p, unsigned m) {
    if (m > p) return 0.0L;
    if (m > p - m) m = static_cast<unsigned>(p - m);
    long double acc = 1.0L;
    for (unsigned k = 1; k <= m; ++k) {
        acc = acc * static_cast<long double>(p - m + k) / static_cast<long double>(k);
    }
    return std::round(acc);
}

double d_p_m(std::uint64_t p, unsigned m) {
    if (m < 1) throw DomainError("d_p_m requires m >= 1");
    const long double count = binomial(p, m);
    if (count < 2.0L)
        throw DomainError("d_p_m requires binom(p, m) >= 2");
    return static_cast<double>(norming_constant(count));
}

NormingSchedule NormingSchedule::at(long double count) {
    return {count, static_cast<double>(norming_constant(count))};
}

NormingSchedule NormingSchedule::pairs(std::uint64_t p) {
    if (p < 3) throw DomainError("pair schedule requires p >= 3");
    return at(binomial(p, 2));
}

NormingSchedule NormingSchedule::tuples(std::uint64_t p, unsigned m) {
    return at(binomial(p, m));
}

double gumbel_cdf(double x) {
    return std::exp(-std::exp(-x));
}

double gumbel_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("gumbel_quantile requires u in (0,1)");
    return -std::log(-std::log(u));
}

double frechet_cdf(double x, double shape) {
    if (!(shape > 0.0)) throw DomainError("frechet_cdf requires a positive shape");
    if (x <= 0.0) return 0.0;
    return std::exp(-std::pow(x, -shape));
}

double jiang_limit_cdf(double x) {
    const double scale = 1.0 / std::sqrt(8.0 * std::numbers::pi);
    return std::exp(-scale * std::exp(-x / 2.0));
}

double jiang_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("jiang_quantile requires alpha in (0,1)");
    // log((1-alpha)^{-1}) = -log1p(-alpha) keeps precision for small alpha.
    return -std::log(8.0 * std::numbers::pi) - 2.0 * std::log(-std::log1p(-alpha));
}

double mean_measure(double a, double b) {
    if (std::isnan(a) || std::isnan(b) || a > b) throw DomainError("mean_measure requires a <= b");
    if (b == std::numeric_limits<double>::infinity()) return std::exp(-a);
    return std::exp(-a) - std::exp(-b);
}

}  // namespace covx::norming
