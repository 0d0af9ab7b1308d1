#include "covx/distributions.hpp"

#include "covx/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace covx::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kLaplaceScale = 0.70710678118654752440;  // b with 2 b^2 = 1

double pareto_scale(double alpha) { return std::sqrt((alpha - 2.0) / alpha); }

// Low bit decides the sign, the top 53 bits give an open uniform.
double signed_magnitude(std::uint64_t word, double magnitude) { return (word & 1u) ? -magnitude : magnitude; }
double open_uniform_of(std::uint64_t word) { return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

bool MomentClass::has_moment(double s) const noexcept {
    return s < index;
}

std::string MomentClass::to_string() const {
    const auto idx = std::isinf(index) ? std::string("inf") : std::to_string(index);
    switch (kind) {
        case MomentKind::C1: return "C1(s<" + idx + ")";
        case MomentKind::C2p: return "C2'";
        case MomentKind::C3p: return "C3'";
        case MomentKind::RV: return "RV(" + idx + ")";
    }
    return "?";
}

DistributionSpec DistributionSpec::gaussian() {
    return {Family::gaussian, 0.0, {MomentKind::C3p, kInf}, 2.0};
}

DistributionSpec DistributionSpec::rademacher() {
    return {Family::rademacher, 0.0, {MomentKind::C3p, kInf}, 0.0};
}

DistributionSpec DistributionSpec::uniform_scaled() {
    // E X^4 = 9/5 for the uniform law on (-sqrt 3, sqrt 3).
    return {Family::uniform_scaled, 0.0, {MomentKind::C3p, kInf}, 0.8};
}

DistributionSpec DistributionSpec::laplace_scaled() {
    // |X_11 X_12| has a Weibull-type tail with shape 1/2: C2' but not C3'.
    return {Family::laplace_scaled, 0.0, {MomentKind::C2p, kInf}, 5.0};
}

DistributionSpec DistributionSpec::student_t(double nu) {
    if (!(nu > 2.0)) throw DomainError("student_t requires nu > 2");
    const double var_x2 = nu > 4.0 ? (2.0 * nu - 2.0) / (nu - 4.0) : kInf;
    return {Family::student_t, nu, {MomentKind::C1, nu}, var_x2};
}

DistributionSpec DistributionSpec::sym_pareto(double alpha) {
    if (!(alpha > 2.0)) throw DomainError("sym_pareto requires alpha > 2");
    const double var_x2 = alpha > 4.0 ? (alpha - 2.0) * (alpha - 2.0) / (alpha * (alpha - 4.0)) - 1.0 : kInf;
    return {Family::sym_pareto, alpha, {MomentKind::RV, alpha}, var_x2};
}

DistributionSpec DistributionSpec::from_name(const std::string& name, double param) {
    if (name == "gaussian") return gaussian();
    if (name == "rademacher") return rademacher();
    if (name == "uniform_scaled") return uniform_scaled();
    if (name == "laplace_scaled") return laplace_scaled();
    if (name == "student_t") return student_t(param);
    if (name == "sym_pareto") return sym_pareto(param);
    throw DomainError("unknown distribution family '" + name + "'");
}

std::string DistributionSpec::name() const {
    switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::rademacher: return "rademacher";
        case Family::uniform_scaled: return "uniform_scaled";
        case Family::student_t: return "student_t";
        case Family::sym_pareto: return "sym_pareto";
        case Family::laplace_scaled: return "laplace_scaled";
    }
    return "?";
}

double DistributionSpec::abs_quantile(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("abs_quantile requires u in [0, 1)");
    switch (family) {
        case Family::rademacher: return 1.0;
        case Family::uniform_scaled: return kSqrt3 * u;
        case Family::laplace_scaled: return -kLaplaceScale * std::log1p(-u);
        case Family::sym_pareto: return pareto_scale(param) * std::pow(1.0 - u, -1.0 / param);
        case Family::gaussian:
        case Family::student_t: break;
    }
    throw DomainError("no closed-form |X| quantile for family " + name());
}

double sample_standard_normal(rng::RandomStream& stream) {
    const double r = std::sqrt(-2.0 * std::log(stream.uniform_open()));
    return r * std::cos(2.0 * std::numbers::pi * stream.uniform());
}

double sample_exponential(rng::RandomStream& stream) {
    return -std::log(stream.uniform_open());
}

double sample_gumbel(rng::RandomStream& stream) {
    return -std::log(-std::log(stream.uniform_open()));
}

void fill(const DistributionSpec& spec, rng::RandomStream& stream, std::span<double> out) {
    const std::size_t size = out.size();
    switch (spec.family) {
        case Family::gaussian: {
            // Box-Muller, both outputs used.
            std::size_t k = 0;
            for (; k + 1 < size; k += 2) {
                const double r = std::sqrt(-2.0 * std::log(stream.uniform_open()));
                const double angle = 2.0 * std::numbers::pi * stream.uniform();
                out[k] = r * std::cos(angle);
                out[k + 1] = r * std::sin(angle);
            }
            if (k < size) out[k] = sample_standard_normal(stream);
            break;
        }
        case Family::rademacher: {
            std::uint64_t bits = 0;
            for (std::size_t k = 0; k < size; ++k) {
                if (k % 64 == 0) bits = stream();
                out[k] = (bits & 1u) ? -1.0 : 1.0;
                bits >>= 1;
            }
            break;
        }
        case Family::uniform_scaled:
            for (auto& v : out) v = kSqrt3 * (2.0 * stream.uniform() - 1.0);
            break;
        case Family::laplace_scaled:
            for (auto& v : out) {
                const std::uint64_t w = stream();
                v = signed_magnitude(w, -kLaplaceScale * std::log(open_uniform_of(w)));
            }
            break;
        case Family::student_t: {
            // Bailey's polar method, then scaled to unit variance.
            const double nu = spec.param;
            const double scale = std::sqrt((nu - 2.0) / nu);
            for (auto& v : out) {
                double a, b, w;
                do {
                    a = 2.0 * stream.uniform() - 1.0;
                    b = 2.0 * stream.uniform() - 1.0;
                    w = a * a + b * b;
                } while (w > 1.0 || w == 0.0);
                v = scale * a * std::sqrt(nu * (std::pow(w, -2.0 / nu) - 1.0) / w);
            }
            break;
        }
        case Family::sym_pareto: {
            const double alpha = spec.param;
            const double scale = pareto_scale(alpha);
            const double expo = -1.0 / alpha;
            for (auto& v : out) {
                const std::uint64_t w = stream();
                v = signed_magnitude(w, scale * std::pow(open_uniform_of(w), expo));
            }
            break;
        }
    }
}

DataMatrix sample_matrix(const DistributionSpec& spec, std::size_t p, std::size_t n, rng::RandomStream& stream) {
    DataMatrix x(p, n);
    fill(spec, stream, x.raw());
    return x;
}

DataMatrix sample_matrix(const DistributionSpec& spec, std::size_t p, std::size_t n, std::uint64_t seed) {
    rng::RandomStream stream(seed, 0);
    return sample_matrix(spec, p, n, stream);
}

double a_quantile(const std::function<double(double)>& abs_quantile, double k) {
    if (!(k >= 1.0)) throw DomainError("a_quantile requires k >= 1");
    return abs_quantile(1.0 - 1.0 / k);
}

double a_quantile(const DistributionSpec& spec, double k) {
    if (!spec.regularly_varying())
        throw DomainError("a_quantile requires a regularly varying entry law, got " + spec.name());
    return a_quantile([&](double u) { return spec.abs_quantile(u); }, k);
}

double solve_tail_level(const std::function<double(double)>& survival, double k, double lo, double hi,
                        double rel_tol) {
    if (!(lo < hi)) throw DomainError("solve_tail_level requires lo < hi");
    if (!(k * survival(lo) >= 1.0 && k * survival(hi) <= 1.0))
        throw DomainError("solve_tail_level: root not bracketed");
    while (hi - lo > rel_tol * std::abs(hi)) {
        const double mid = 0.5 * (lo + hi);
        if (k * survival(mid) >= 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace covx::sim
