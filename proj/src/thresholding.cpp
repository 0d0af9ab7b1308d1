#include "covx/thresholding.hpp"

#include "covx/covkernels.hpp"
#include "covx/errors.hpp"

#include <cmath>

namespace covx::thresholding {

namespace {

SymMatrix hard_threshold(const SymMatrix& m, double level) {
    SymMatrix out(m.p());
    for (std::size_t i = 0; i < m.p(); ++i)
        for (std::size_t j = i; j < m.p(); ++j) {
            const double v = m(i, j);
            if (std::abs(v) > level) out.set(i, j, v);
        }
    return out;
}

void require_match(const SymMatrix& m, const ThresholdSpec& spec) {
    if (m.p() != spec.p) throw DomainError("threshold spec dimension does not match the matrix");
}

}  // namespace

ThresholdSpec ThresholdSpec::make(double C, std::size_t n, std::size_t p) {
    if (!(C > 0.0)) throw DomainError("threshold constant C must be positive");
    if (n < 1) throw DomainError("threshold spec requires n >= 1");
    if (p < 2) throw DomainError("threshold spec requires p >= 2");
    return {C, n, p, C * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n))};
}

ThresholdEstimate threshold_cov(const SymMatrix& s, const ThresholdSpec& spec) {
    require_match(s, spec);
    return {hard_threshold(s, static_cast<double>(spec.n) * spec.t_n), {}};
}

ThresholdEstimate threshold_corr(const SymMatrix& r, const ThresholdSpec& spec) {
    require_match(r, spec);
    ThresholdEstimate est{hard_threshold(r, spec.t_n), {}};
    if (spec.t_n >= 1.0)
        est.warnings.push_back("degenerate threshold: t_n = " + std::to_string(spec.t_n) +
                               " >= 1 zeroes every entry including the unit diagonal");
    return est;
}

double consistency_metric(const SymMatrix& estimate, EstimateKind kind, std::size_t n, std::size_t p) {
    if (p < 1 || estimate.p() != p) throw DomainError("consistency_metric dimension mismatch");
    const double scale = kind == EstimateKind::cov ? 1.0 / static_cast<double>(n) : 1.0;
    SymMatrix dev(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) dev.set(i, j, scale * estimate(i, j) - (i == j ? 1.0 : 0.0));
    return std::sqrt(static_cast<double>(n) / static_cast<double>(p)) * kernels::operator_norm(dev);
}

}  // namespace covx::thresholding
