#include "covx/extremes.hpp"

#include "covx/distributions.hpp"
#include "covx/errors.hpp"
#include "covx/norming.hpp"
#include "covx/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>

namespace covx::extremes {

namespace {

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

using QuantileKey = std::tuple<int, std::size_t, std::uint64_t, std::size_t, std::uint64_t>;

struct QuantileCache {
    std::shared_mutex mutex;
    std::map<QuantileKey, double> values;
};

QuantileCache& cache() {
    static QuantileCache instance;
    return instance;
}

}  // namespace

std::string to_string(SpacingKind kind) {
    switch (kind) {
        case SpacingKind::T1: return "T1";
        case SpacingKind::T2: return "T2";
        case SpacingKind::T3: return "T3";
    }
    return "?";
}

SpacingKind spacing_kind_from_string(const std::string& name) {
    if (name == "T1" || name == "t1" || name == "1") return SpacingKind::T1;
    if (name == "T2" || name == "t2" || name == "2") return SpacingKind::T2;
    if (name == "T3" || name == "t3" || name == "3") return SpacingKind::T3;
    throw DomainError("unknown spacing statistic '" + name + "'");
}

double jiang_statistic(double maxabs, std::size_t n, std::size_t p, StatMode /*mode*/) {
    if (p < 3) throw DomainError("jiang_statistic requires p >= 3");
    const double lp = std::log(static_cast<double>(p));
    return static_cast<double>(n) * maxabs * maxabs - 4.0 * lp + std::log(lp);
}

TestDecision jiang_test(double statistic, double alpha) {
    const double q = norming::jiang_quantile(alpha);
    return {statistic, q, alpha, statistic >= q};
}

double spacing_statistic(std::span<const double> top, std::size_t n, std::size_t p, SpacingSpec spec) {
    if (spec.k < 2) throw DomainError("spacing statistics require k >= 2");
    if (top.size() < spec.k) throw DomainError("spacing statistic needs k order statistics, got fewer");
    const double d = norming::tilde_d_p(p);
    const double root_n = std::sqrt(static_cast<double>(n));
    const auto scaled_gap = [&](std::size_t i) { return d * (top[i] - top[i + 1]) / root_n; };

    switch (spec.kind) {
        case SpacingKind::T1:
            return d * (top[0] - top[spec.k - 1]) / root_n;
        case SpacingKind::T2: {
            double best = scaled_gap(0);
            for (std::size_t i = 1; i + 1 < spec.k; ++i) best = std::max(best, scaled_gap(i));
            return best;
        }
        case SpacingKind::T3: {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < spec.k; ++i) {
                const double g = scaled_gap(i);
                acc += g * g;
            }
            return acc;
        }
    }
    return 0.0;
}

double spacing_statistic(const kernels::OrderStats& top, std::size_t n, std::size_t p, SpacingSpec spec) {
    const auto values = top.values();
    return spacing_statistic(values, n, p, spec);
}

std::vector<double> normalized_top_points(std::span<const double> top, std::size_t n, std::size_t p) {
    const double d = norming::tilde_d_p(p);
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> out;
    out.reserve(top.size());
    for (double v : top) out.push_back(d * (v / root_n - d));
    return out;
}

std::vector<LimitLawSample> sample_limit_vector(std::size_t k, std::size_t count, std::uint64_t seed) {
    if (k < 1 || count < 1) throw DomainError("sample_limit_vector requires k >= 1 and count >= 1");
    rng::RandomStream stream(seed, rng::kLimitVectorStream);
    std::vector<LimitLawSample> out(count);
    for (auto& draw : out) {
        draw.values.resize(k);
        double gamma = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            gamma += sim::sample_exponential(stream);
            draw.values[i] = -std::log(gamma);
        }
    }
    return out;
}

double spacing_limit_functional(SpacingKind kind, std::span<const double> u) {
    const std::size_t k = u.size();
    if (k < 2) throw DomainError("spacing limit needs k >= 2");
    switch (kind) {
        case SpacingKind::T1:
            return std::log(u[0] / u[k - 1]);
        case SpacingKind::T2: {
            double best = std::log(u[0] / u[1]);
            for (std::size_t i = 1; i + 1 < k; ++i) best = std::max(best, std::log(u[i] / u[i + 1]));
            return best;
        }
        case SpacingKind::T3: {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < k; ++i) {
                const double g = std::log(u[i] / u[i + 1]);
                acc += g * g;
            }
            return acc;
        }
    }
    return 0.0;
}

double spacing_limit_quantile(SpacingSpec spec, double alpha, std::size_t mc_count, std::uint64_t seed) {
    require_alpha(alpha);
    if (spec.k < 2) throw DomainError("spacing statistics require k >= 2");
    if (mc_count < 10000) throw DomainError("spacing_limit_quantile requires mc_count >= 10^4");

    const QuantileKey key{static_cast<int>(spec.kind), spec.k, std::bit_cast<std::uint64_t>(alpha), mc_count, seed};
    auto& c = cache();
    {
        std::shared_lock lock(c.mutex);
        if (auto it = c.values.find(key); it != c.values.end()) return it->second;
    }

    // One substream per k, shared by all kinds: at k = 2 the three limits are
    // functionals of the same draws.
    const std::uint64_t stream_id = rng::kSpacingLimitStream ^ (static_cast<std::uint64_t>(spec.k) << 40);
    rng::RandomStream stream(seed, stream_id);
    std::vector<double> uniforms(spec.k);
    std::vector<double> sample(mc_count);
    for (auto& s : sample) {
        for (auto& u : uniforms) u = stream.uniform_open();
        std::sort(uniforms.begin(), uniforms.end(), std::greater<>());
        s = spacing_limit_functional(spec.kind, uniforms);
    }
    std::sort(sample.begin(), sample.end());
    const double value = empirical_quantile(sample, 1.0 - alpha);

    std::unique_lock lock(c.mutex);
    return c.values.emplace(key, value).first->second;
}

std::vector<QuantileTableRow> quantile_table() {
    auto& c = cache();
    std::shared_lock lock(c.mutex);
    std::vector<QuantileTableRow> rows;
    for (const auto& [key, value] : c.values) {
        const auto& [kind, k, alpha_bits, mc, seed] = key;
        rows.push_back({static_cast<SpacingKind>(kind), k, std::bit_cast<double>(alpha_bits), mc, seed, value});
    }
    return rows;
}

bool RectRegion::contains(std::span<const double> v) const {
    if (v.size() != lower.size()) throw DomainError("region dimension mismatch");
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] < lower[i] || v[i] > upper[i]) return false;
    return true;
}

Region RectRegion::as_region() const {
    return [self = *this](std::span<const double> v) { return self.contains(v); };
}

RectRegion calibrate_default_region(std::size_t k, double alpha, std::size_t draws, std::uint64_t seed,
                                    double coverage_tol) {
    require_alpha(alpha);
    if (draws < 1000) throw DomainError("region calibration needs at least 1000 draws");
    const auto sample = sample_limit_vector(k, draws, seed);

    std::vector<std::vector<double>> marginals(k, std::vector<double>(draws));
    for (std::size_t d = 0; d < draws; ++d)
        for (std::size_t i = 0; i < k; ++i) marginals[i][d] = sample[d].values[i];
    for (auto& m : marginals) std::sort(m.begin(), m.end());

    RectRegion region;
    region.alpha = alpha;
    region.draws = draws;
    region.seed = seed;
    region.lower.resize(k);
    region.upper.resize(k);

    const auto set_level = [&](double beta) {
        for (std::size_t i = 0; i < k; ++i) {
            region.lower[i] = empirical_quantile(marginals[i], beta / 2.0);
            region.upper[i] = empirical_quantile(marginals[i], 1.0 - beta / 2.0);
        }
        std::size_t inside = 0;
        for (const auto& s : sample) inside += region.contains(s.values) ? 1 : 0;
        region.band_level = beta;
        region.coverage = static_cast<double>(inside) / static_cast<double>(draws);
        return region.coverage;
    };

    // Coverage decreases in the band level: Bonferroni alpha/k over-covers,
    // a single band at alpha under-covers.
    double lo = alpha / static_cast<double>(k);
    double hi = alpha;
    const double target = 1.0 - alpha;
    if (std::abs(set_level(lo) - target) <= coverage_tol) return region;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double cov = set_level(mid);
        if (std::abs(cov - target) <= coverage_tol) return region;
        if (cov > target)
            lo = mid;
        else
            hi = mid;
    }
    throw NonConvergenceError("default region calibration did not reach the target coverage", region.coverage, {});
}

TestDecision region_test(std::span<const double> points, const Region& region, double alpha) {
    const bool outside = !region(points);
    return {outside ? 1.0 : 0.0, 1.0, alpha, outside};
}

double empirical_quantile(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw DomainError("empirical_quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace covx::extremes
