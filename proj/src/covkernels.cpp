#include "covx/covkernels.hpp"

#include "covx/errors.hpp"
#include "covx/norming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace covx::kernels {

namespace {

// Rows of S per tile: keep the tile around 32 KiB so it stays in L1 across
// the whole t loop.
std::size_t tile_rows(std::size_t p) {
    const std::size_t bytes_per_row = p * sizeof(double);
    return std::clamp<std::size_t>((32u << 10) / std::max<std::size_t>(bytes_per_row, 1), 1, 64);
}

void require_pairs(std::size_t p) {
    if (p < 3) throw DomainError("normalized points require p >= 3, got p = " + std::to_string(p));
}

template <class F>
std::vector<NormedPoint> map_upper(const SymMatrix& m, F&& f) {
    const std::size_t p = m.p();
    std::vector<NormedPoint> out;
    out.reserve(p * (p - 1) / 2);
    for (std::size_t i = 0; i < p; ++i) {
        const auto row = m.row(i);
        for (std::size_t j = i + 1; j < p; ++j)
            out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), f(row[j])});
    }
    return out;
}

template <class F>
std::vector<NormedPoint> map_diag(std::span<const double> diag, F&& f) {
    std::vector<NormedPoint> out;
    out.reserve(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i)
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), f(diag[i])});
    return out;
}

std::vector<double> diagonal_of(const SymMatrix& m) {
    std::vector<double> d(m.p());
    for (std::size_t i = 0; i < m.p(); ++i) d[i] = m(i, i);
    return d;
}

bool index_less(const RankedEntry& a, const RankedEntry& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
}

struct HigherFirst {
    bool operator()(const RankedEntry& a, const RankedEntry& b) const {
        return a.value != b.value ? a.value > b.value : index_less(a, b);
    }
};

struct LowerFirst {
    bool operator()(const RankedEntry& a, const RankedEntry& b) const {
        return a.value != b.value ? a.value < b.value : index_less(a, b);
    }
};

// Keeps the k best entries under `Better`; the heap top is the worst kept.
template <class Better>
class BoundedSelection {
public:
    explicit BoundedSelection(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    void offer(const RankedEntry& e) {
        if (heap_.size() < k_) {
            heap_.push_back(e);
            std::push_heap(heap_.begin(), heap_.end(), better_);
        } else if (better_(e, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), better_);
            heap_.back() = e;
            std::push_heap(heap_.begin(), heap_.end(), better_);
        }
    }

    OrderStats finish() && {
        std::sort(heap_.begin(), heap_.end(), better_);
        return {k_, std::move(heap_)};
    }

private:
    std::size_t k_;
    Better better_;
    std::vector<RankedEntry> heap_;
};

std::vector<double> start_vector(std::size_t p, std::size_t restart) {
    std::vector<double> v(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double mag = restart == 0 ? 1.0 : 1.0 + static_cast<double>((i + restart) % p);
        v[i] = (i % 2 == 0) ? mag : -mag;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

void multiply(const SymMatrix& m, const std::vector<double>& v, std::vector<double>& out) {
    const std::size_t p = m.p();
    for (std::size_t i = 0; i < p; ++i) {
        const auto row = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < p; ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

std::vector<double> OrderStats::values() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.value);
    return out;
}

GramMatrix gram(const DataMatrix& x) {
    const std::size_t p = x.p();
    const std::size_t n = x.n();
    GramMatrix s(p);
    double* out = s.raw().data();
    const std::size_t rows = tile_rows(p);

    for (std::size_t i0 = 0; i0 < p; i0 += rows) {
        const std::size_t i1 = std::min(p, i0 + rows);
        for (std::size_t t = 0; t < n; ++t) {
            const double* obs = x.observation(t).data();
            for (std::size_t i = i0; i < i1; ++i) {
                const double xi = obs[i];
                double* srow = out + i * p;
                for (std::size_t j = i; j < p; ++j) srow[j] += xi * obs[j];
            }
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) out[j * p + i] = out[i * p + j];
    return s;
}

SymMatrix correlation(const GramMatrix& s) {
    const std::size_t p = s.p();
    for (std::size_t i = 0; i < p; ++i)
        if (!(s(i, i) > 0.0)) throw DomainError("degenerate diagonal: S_ii = 0 at i = " + std::to_string(i));
    SymMatrix r(p);
    for (std::size_t i = 0; i < p; ++i) {
        r.set(i, i, 1.0);
        for (std::size_t j = i + 1; j < p; ++j) {
            const double v = s(i, j) / std::sqrt(s(i, i) * s(j, j));
            r.set(i, j, std::clamp(v, -1.0, 1.0));
        }
    }
    return r;
}

double tensor_entry(const DataMatrix& x, std::span<const std::size_t> idx) {
    if (idx.empty()) throw DomainError("tensor_entry requires a non-empty index tuple");
    for (std::size_t a = 0; a < idx.size(); ++a) {
        if (idx[a] >= x.p()) throw DomainError("tensor index out of range");
        if (a > 0 && idx[a] <= idx[a - 1]) throw DomainError("tensor index tuple must be strictly increasing");
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < x.n(); ++t) {
        const auto obs = x.observation(t);
        double prod = 1.0;
        for (std::size_t i : idx) prod *= obs[i];
        acc += prod;
    }
    return acc;
}

std::vector<NormedPoint> normalized_offdiag_points(const GramMatrix& s, std::size_t n) {
    require_pairs(s.p());
    const double d = norming::tilde_d_p(s.p());
    const double root_n = std::sqrt(static_cast<double>(n));
    return map_upper(s, [&](double v) { return d * (v / root_n - d); });
}

std::vector<NormedPoint> normalized_corr_points(const SymMatrix& r, std::size_t n) {
    require_pairs(r.p());
    const double d = norming::tilde_d_p(r.p());
    const double root_n = std::sqrt(static_cast<double>(n));
    return map_upper(r, [&](double v) { return d * (root_n * v - d); });
}

std::vector<NormedPoint> squared_points(const GramMatrix& s, std::size_t n) {
    require_pairs(s.p());
    const double d = norming::tilde_d_p(s.p());
    const double two_n = 2.0 * static_cast<double>(n);
    const double shift = 0.5 * d * d + std::numbers::ln2;
    return map_upper(s, [&](double v) { return v * v / two_n - shift; });
}

std::vector<double> gram_diagonal(const DataMatrix& x) {
    std::vector<double> diag(x.p(), 0.0);
    for (std::size_t t = 0; t < x.n(); ++t) {
        const auto obs = x.observation(t);
        for (std::size_t i = 0; i < x.p(); ++i) diag[i] += obs[i] * obs[i];
    }
    return diag;
}

std::vector<NormedPoint> diagonal_points(std::span<const double> diag, std::size_t n, double var_x2) {
    if (!(var_x2 > 0.0) || !std::isfinite(var_x2))
        throw DomainError("diagonal_points requires 0 < Var(X^2) < inf");
    const double d = norming::d_p(diag.size());
    const double nd = static_cast<double>(n);
    const double scale = std::sqrt(nd * var_x2);
    return map_diag(diag, [&](double v) { return d * ((v - nd) / scale - d); });
}

std::vector<NormedPoint> diagonal_points(const GramMatrix& s, std::size_t n, double var_x2) {
    return diagonal_points(diagonal_of(s), n, var_x2);
}

std::vector<NormedPoint> heavy_tail_diag_points(std::span<const double> diag, std::size_t n, double a_np) {
    if (!(a_np > 0.0)) throw DomainError("heavy_tail_diag_points requires a_np > 0");
    const double nd = static_cast<double>(n);
    const double a2 = a_np * a_np;
    return map_diag(diag, [&](double v) { return (v - nd) / a2; });
}

std::vector<NormedPoint> heavy_tail_diag_points(const GramMatrix& s, std::size_t n, double a_np) {
    return heavy_tail_diag_points(diagonal_of(s), n, a_np);
}

std::vector<TuplePoint> normalized_tensor_points(const DataMatrix& x, unsigned m) {
    if (m < 1 || m > x.p()) throw DomainError("tensor order must satisfy 1 <= m <= p");
    const double d = norming::d_p_m(x.p(), m);
    const double root_n = std::sqrt(static_cast<double>(x.n()));

    std::vector<TuplePoint> out;
    std::vector<std::size_t> idx(m);
    for (unsigned a = 0; a < m; ++a) idx[a] = a;
    const std::size_t p = x.p();
    while (true) {
        const double v = tensor_entry(x, idx);
        out.push_back({std::vector<std::uint32_t>(idx.begin(), idx.end()), d * (v / root_n - d)});
        // Advance to the next strictly increasing tuple in lexicographic order.
        int a = static_cast<int>(m) - 1;
        while (a >= 0 && idx[a] == p - m + static_cast<std::size_t>(a)) --a;
        if (a < 0) break;
        ++idx[a];
        for (unsigned b = static_cast<unsigned>(a) + 1; b < m; ++b) idx[b] = idx[b - 1] + 1;
    }
    return out;
}

Extremes offdiag_extremes(const SymMatrix& m, std::size_t k) {
    const std::size_t p = m.p();
    const std::size_t pairs = p * (p - (p > 0 ? 1 : 0)) / 2;
    if (k < 1 || k > pairs)
        throw DomainError("offdiag_extremes requires 1 <= k <= p(p-1)/2, got k = " + std::to_string(k));

    BoundedSelection<HigherFirst> top(k);
    BoundedSelection<LowerFirst> bottom(k);
    for (std::size_t i = 0; i < p; ++i) {
        const auto row = m.row(i);
        for (std::size_t j = i + 1; j < p; ++j) {
            const RankedEntry e{row[j], static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
            top.offer(e);
            bottom.offer(e);
        }
    }
    return {std::move(top).finish(), std::move(bottom).finish()};
}

double operator_norm(const SymMatrix& m, const PowerIterationOptions& opts) {
    const std::size_t p = m.p();
    if (p == 0) return 0.0;
    const auto raw = m.raw();
    if (std::all_of(raw.begin(), raw.end(), [](double v) { return v == 0.0; })) return 0.0;

    std::vector<double> w(p), u(p);
    std::vector<double> v = start_vector(p, 0);
    std::size_t restarts = 0;
    double theta = 0.0;
    double theta_prev = 0.0;
    double delta_prev = -1.0;

    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        multiply(m, v, w);
        const double ww = dot(w, w);
        if (ww == 0.0) {
            // v lies in the null space; rotate and start over.
            if (++restarts > p) return 0.0;
            v = start_vector(p, restarts);
            theta_prev = 0.0;
            delta_prev = -1.0;
            continue;
        }
        theta = ww;  // Rayleigh quotient of M^2 at unit v
        multiply(m, w, u);
        const double norm_u = std::sqrt(dot(u, u));
        for (std::size_t i = 0; i < p; ++i) v[i] = u[i] / norm_u;

        const double delta = std::abs(theta - theta_prev);
        if (delta <= 64.0 * std::numeric_limits<double>::epsilon() * theta) return std::sqrt(theta);
        if (delta_prev > 0.0) {
            // Geometric-rate extrapolation of the remaining error.
            const double rho = delta / delta_prev;
            if (rho < 1.0 && delta * rho / (1.0 - rho) <= opts.tol * theta && delta <= opts.tol * theta)
                return std::sqrt(theta);
        }
        delta_prev = delta;
        theta_prev = theta;
    }
    throw NonConvergenceError("operator_norm: power iteration did not converge", std::sqrt(theta), v);
}

}  // namespace covx::kernels
