#include "covx/simharness.hpp"

#include "covx/covkernels.hpp"
#include "covx/errors.hpp"
#include "covx/extremes.hpp"
#include "covx/norming.hpp"
#include "covx/thresholding.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace covx::sim {

namespace {

using kernels::NormedPoint;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool uses_offdiag(Functional f) {
    switch (f) {
        case Functional::pp_counts:
        case Functional::max_gumbel:
        case Functional::joint_max_min:
        case Functional::squares:
        case Functional::corr_variants:
        case Functional::rate_check:
        case Functional::test_size: return true;
        default: return false;
    }
}

bool contains(const std::vector<Functional>& fs, Functional f) {
    return std::find(fs.begin(), fs.end(), f) != fs.end();
}

std::string window_label(const Window& w) {
    auto fmt = [](double v) {
        if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };
    return "(" + fmt(w.a) + "," + fmt(w.b) + "]";
}

void count_windows(std::span<const NormedPoint> pts, const std::vector<Window>& windows,
                   std::vector<std::uint32_t>& counts) {
    counts.assign(windows.size(), 0);
    for (const auto& pt : pts)
        for (std::size_t w = 0; w < windows.size(); ++w)
            if (pt.value > windows[w].a && pt.value <= windows[w].b) ++counts[w];
}

double sorted_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return extremes::empirical_quantile(v, 0.5);
}

double ks_against(std::vector<double> v, const std::function<double(double)>& cdf) {
    std::sort(v.begin(), v.end());
    return ks_statistic(v, cdf);
}

// Mean and standard error of per-replicate integer counts, summed exactly.
WindowRow window_row(const std::string& label, const Window& w, const std::vector<std::uint32_t>& counts,
                     double target, double tolerance) {
    const double r = static_cast<double>(counts.size());
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    const double mean = static_cast<double>(sum) / r;
    double ss = 0.0;
    for (auto c : counts) ss += (c - mean) * (c - mean);
    const double sd = counts.size() > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
    WindowRow row;
    row.label = label + " " + window_label(w);
    row.a = w.a;
    row.b = w.b;
    row.mean_count = mean;
    row.std_error = sd / std::sqrt(r);
    row.target = target;
    row.tolerance = tolerance;
    return row;
}

std::vector<std::uint32_t> column(const std::vector<std::vector<std::uint32_t>>& per_rep, std::size_t w) {
    std::vector<std::uint32_t> out(per_rep.size());
    for (std::size_t r = 0; r < per_rep.size(); ++r) out[r] = per_rep[r][w];
    return out;
}

RateRow rate_row(const std::string& label, double alpha, double threshold, const std::vector<bool>& rejects) {
    const std::size_t hits = static_cast<std::size_t>(std::count(rejects.begin(), rejects.end(), true));
    const auto [lo, hi] = wilson_interval(hits, rejects.size());
    return {label, alpha, threshold, static_cast<double>(hits) / static_cast<double>(rejects.size()), lo, hi,
            rejects.size()};
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// Off-diagonal pass: one Gram matrix per replicate feeds every functional
// built from the entries S_ij / R_ij.

struct OffdiagNeeds {
    bool corr = false;
    bool squares = false;
    bool topk = false;
    bool threshold = false;
};

struct OffdiagRecord {
    double cov_max = 0, cov_min = 0;
    double corr_max = 0, corr_min = 0;
    double s_top_rate = 0, s_bottom_rate = 0;
    double r_top_rate = 0, r_bottom_rate = 0;
    double w_n = 0, l_n = 0;
    std::vector<std::uint32_t> cov_counts, corr_counts, sq_counts;
    std::vector<double> top;
    double thr_cov = 0, thr_corr = 0;
    std::size_t thr_corr_survivors = 0;
};

OffdiagNeeds needs_for(const std::vector<Functional>& fs) {
    OffdiagNeeds needs;
    needs.corr = contains(fs, Functional::max_gumbel) || contains(fs, Functional::joint_max_min) ||
                 contains(fs, Functional::corr_variants) || contains(fs, Functional::test_size) ||
                 contains(fs, Functional::rate_check);
    needs.squares = contains(fs, Functional::squares);
    needs.topk = contains(fs, Functional::test_size);
    needs.threshold = contains(fs, Functional::rate_check);
    return needs;
}

OffdiagRecord offdiag_replicate(const ExperimentConfig& cfg, const OffdiagNeeds& needs, std::size_t r) {
    rng::RandomStream stream(cfg.master_seed, r);
    const DataMatrix x = sample_matrix(cfg.spec, cfg.p, cfg.n, stream);
    const GramMatrix s = kernels::gram(x);

    const double d = norming::tilde_d_p(cfg.p);
    const double nd = static_cast<double>(cfg.n);
    const double root_n = std::sqrt(nd);
    const double rate_scale = std::sqrt(nd * std::log(static_cast<double>(cfg.p)));

    OffdiagRecord rec;
    const auto ext = kernels::offdiag_extremes(s, needs.topk ? cfg.k : 1);
    const double s_max = ext.top.entries.front().value;
    const double s_min = ext.bottom.entries.front().value;
    rec.cov_max = d * (s_max / root_n - d);
    rec.cov_min = d * (s_min / root_n + d);
    rec.s_top_rate = s_max / rate_scale;
    rec.s_bottom_rate = s_min / rate_scale;
    rec.w_n = std::max(std::abs(s_max), std::abs(s_min)) / nd;
    if (needs.topk) rec.top = ext.top.values();

    count_windows(kernels::normalized_offdiag_points(s, cfg.n), cfg.windows, rec.cov_counts);
    if (needs.squares) count_windows(kernels::squared_points(s, cfg.n), cfg.windows, rec.sq_counts);

    if (needs.corr) {
        const SymMatrix rm = kernels::correlation(s);
        const auto rext = kernels::offdiag_extremes(rm, 1);
        const double r_max = rext.top.entries.front().value;
        const double r_min = rext.bottom.entries.front().value;
        rec.corr_max = d * (root_n * r_max - d);
        rec.corr_min = d * (root_n * r_min + d);
        rec.r_top_rate = r_max * root_n / std::sqrt(std::log(static_cast<double>(cfg.p)));
        rec.r_bottom_rate = r_min * root_n / std::sqrt(std::log(static_cast<double>(cfg.p)));
        rec.l_n = std::max(std::abs(r_max), std::abs(r_min));
        count_windows(kernels::normalized_corr_points(rm, cfg.n), cfg.windows, rec.corr_counts);

        if (needs.threshold) {
            const auto spec = thresholding::ThresholdSpec::make(cfg.threshold_C, cfg.n, cfg.p);
            const auto rhat = thresholding::threshold_corr(rm, spec);
            rec.thr_corr = thresholding::consistency_metric(rhat.matrix, thresholding::EstimateKind::corr, cfg.n, cfg.p);
            for (std::size_t i = 0; i < cfg.p; ++i)
                for (std::size_t j = i + 1; j < cfg.p; ++j) rec.thr_corr_survivors += rhat.matrix(i, j) != 0.0;
            const auto shat = thresholding::threshold_cov(s, spec);
            rec.thr_cov = thresholding::consistency_metric(shat.matrix, thresholding::EstimateKind::cov, cfg.n, cfg.p);
        }
    }
    return rec;
}

template <class Record, class F>
std::vector<Record> run_replicates(const ExperimentConfig& cfg, std::size_t workers, F&& replicate) {
    std::vector<Record> out(cfg.replicates);
    parallel_for(cfg.replicates, workers, [&](std::size_t r) { out[r] = replicate(r); });
    return out;
}

template <class Record, class Get>
std::vector<double> gather(const std::vector<Record>& recs, Get&& get) {
    std::vector<double> out;
    out.reserve(recs.size());
    for (const auto& rec : recs) out.push_back(get(rec));
    return out;
}

MCSummary summarize_pp(const ExperimentConfig& cfg, const std::vector<OffdiagRecord>& recs) {
    MCSummary sum;
    sum.functional = Functional::pp_counts;
    std::vector<std::vector<std::uint32_t>> counts;
    for (const auto& r : recs) counts.push_back(r.cov_counts);
    for (std::size_t w = 0; w < cfg.windows.size(); ++w)
        sum.windows.push_back(window_row("cov", cfg.windows[w], column(counts, w),
                                         norming::mean_measure(cfg.windows[w].a, cfg.windows[w].b), cfg.tol_window));
    for (std::size_t w = 0; w < cfg.windows.size(); ++w) {
        const auto col = column(counts, w);
        sum.series.push_back({"count " + window_label(cfg.windows[w]), std::vector<double>(col.begin(), col.end())});
    }
    return sum;
}

MCSummary summarize_squares(const ExperimentConfig& cfg, const std::vector<OffdiagRecord>& recs) {
    MCSummary sum;
    sum.functional = Functional::squares;
    std::vector<std::vector<std::uint32_t>> counts;
    for (const auto& r : recs) counts.push_back(r.sq_counts);
    for (std::size_t w = 0; w < cfg.windows.size(); ++w)
        sum.windows.push_back(window_row("squares", cfg.windows[w], column(counts, w),
                                         norming::mean_measure(cfg.windows[w].a, cfg.windows[w].b), cfg.tol_window));
    return sum;
}

MCSummary summarize_corr(const ExperimentConfig& cfg, const std::vector<OffdiagRecord>& recs) {
    MCSummary sum;
    sum.functional = Functional::corr_variants;
    std::vector<std::vector<std::uint32_t>> counts;
    for (const auto& r : recs) counts.push_back(r.corr_counts);
    for (std::size_t w = 0; w < cfg.windows.size(); ++w)
        sum.windows.push_back(window_row("corr", cfg.windows[w], column(counts, w),
                                         norming::mean_measure(cfg.windows[w].a, cfg.windows[w].b), cfg.tol_window));
    const auto corr_max = gather(recs, [](const OffdiagRecord& r) { return r.corr_max; });
    sum.ks.push_back({"corr max", "gumbel", ks_against(corr_max, norming::gumbel_cdf), corr_max.size(), cfg.tol_ks});
    if (cfg.spec.family == Family::rademacher)
        sum.notes.push_back("rademacher entries: S_ii = n, correlation points coincide with covariance points");
    return sum;
}

MCSummary summarize_max(const ExperimentConfig& cfg, const std::vector<OffdiagRecord>& recs) {
    MCSummary sum;
    sum.functional = Functional::max_gumbel;
    const auto cov_max = gather(recs, [](const OffdiagRecord& r) { return r.cov_max; });
    const auto cov_min = gather(recs, [](const OffdiagRecord& r) { return r.cov_min; });
    const auto corr_max = gather(recs, [](const OffdiagRecord& r) { return r.corr_max; });
    const auto corr_min = gather(recs, [](const OffdiagRecord& r) { return r.corr_min; });
    const auto lower_law = [](double y) { return 1.0 - norming::gumbel_cdf(-y); };

    sum.ks.push_back({"cov max", "gumbel", ks_against(cov_max, norming::gumbel_cdf), cov_max.size(), cfg.tol_ks});
    sum.ks.push_back({"cov min", "1-gumbel(-y)", ks_against(cov_min, lower_law), cov_min.size(), cfg.tol_ks});
    sum.ks.push_back({"corr max", "gumbel", ks_against(corr_max, norming::gumbel_cdf), corr_max.size(), cfg.tol_ks});
    sum.ks.push_back({"corr min", "1-gumbel(-y)", ks_against(corr_min, lower_law), corr_min.size(), cfg.tol_ks});

    const auto add_median = [&](const std::string& label, std::vector<double> v, double target) {
        sum.quantiles.push_back({label, 0.5, sorted_median(std::move(v)), target, cfg.tol_rate_median});
    };
    add_median("S_(1)/sqrt(n log p)", gather(recs, [](const OffdiagRecord& r) { return r.s_top_rate; }), 2.0);
    add_median("S_(min)/sqrt(n log p)", gather(recs, [](const OffdiagRecord& r) { return r.s_bottom_rate; }), -2.0);
    add_median("R_(1) sqrt(n/log p)", gather(recs, [](const OffdiagRecord& r) { return r.r_top_rate; }), 2.0);
    add_median("R_(min) sqrt(n/log p)", gather(recs, [](const OffdiagRecord& r) { return r.r_bottom_rate; }), -2.0);

    auto sorted_max = cov_max;
    std::sort(sorted_max.begin(), sorted_max.end());
    for (double prob : {0.1, 0.25, 0.5, 0.75, 0.9})
        sum.quantiles.push_back({"cov max", prob, extremes::empirical_quantile(sorted_max, prob),
                                 norming::gumbel_quantile(prob), kNaN});

    sum.series = {{"cov_max", cov_max}, {"cov_min", cov_min}, {"corr_max", corr_max}, {"corr_min", corr_min}};
    return sum;
}

MCSummary summarize_joint(const ExperimentConfig& cfg, const std::vector<OffdiagRecord>& recs) {
    MCSummary sum;
    sum.functional = Functional::joint_max_min;
    const double r = static_cast<double>(recs.size());
    for (const char* which : {"cov", "corr"}) {
        const bool cov = which[1] == 'o';
        for (const auto& g : cfg.cells) {
            std::size_t hits = 0;
            for (const auto& rec : recs) {
                const double mx = cov ? rec.cov_max : rec.corr_max;
                const double mn = cov ? rec.cov_min : rec.corr_min;
                hits += (mx <= g.x && mn <= g.y) ? 1 : 0;
            }
            const double target = norming::gumbel_cdf(g.x) * (1.0 - norming::gumbel_cdf(-g.y));
            sum.cells.push_back({which, g.x, g.y, static_cast<double>(hits) / r, target, cfg.tol_cell});
        }
    }
    return sum;
}

MCSummary summarize_rate_check(const ExperimentConfig& cfg, const std::vector<OffdiagRecord>& recs) {
    MCSummary sum;
    sum.functional = Functional::rate_check;
    const auto corr = gather(recs, [](const OffdiagRecord& r) { return r.thr_corr; });
    const auto cov = gather(recs, [](const OffdiagRecord& r) { return r.thr_cov; });
    sum.quantiles.push_back({"sqrt(n/p)||R_hat - I||", 0.5, sorted_median(corr), 0.0, kNaN});
    sum.quantiles.push_back({"sqrt(n/p)||S_hat/n - I||", 0.5, sorted_median(cov), 0.0, kNaN});
    std::size_t with_survivors = 0;
    for (const auto& r : recs) with_survivors += r.thr_corr_survivors > 0;
    const auto spec = thresholding::ThresholdSpec::make(cfg.threshold_C, cfg.n, cfg.p);
    sum.notes.push_back("t_n = " + std::to_string(spec.t_n) + " (C = " + std::to_string(cfg.threshold_C) + ")");
    sum.notes.push_back("replicates with surviving off-diagonal correlations: " + std::to_string(with_survivors));
    sum.series = {{"corr_metric", corr}, {"cov_metric", cov}};
    return sum;
}

MCSummary summarize_test_size(const ExperimentConfig& cfg, const std::vector<OffdiagRecord>& recs) {
    MCSummary sum;
    sum.functional = Functional::test_size;
    const std::size_t reps = recs.size();

    std::vector<double> jiang_cov(reps), jiang_corr(reps);
    std::vector<std::vector<double>> spacing(3, std::vector<double>(reps));
    std::vector<std::vector<double>> points(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        jiang_cov[r] = extremes::jiang_statistic(recs[r].w_n, cfg.n, cfg.p, extremes::StatMode::covariance);
        jiang_corr[r] = extremes::jiang_statistic(recs[r].l_n, cfg.n, cfg.p, extremes::StatMode::correlation);
        for (int kind = 0; kind < 3; ++kind)
            spacing[kind][r] = extremes::spacing_statistic(recs[r].top, cfg.n, cfg.p,
                                                           {static_cast<extremes::SpacingKind>(kind), cfg.k});
        points[r] = extremes::normalized_top_points(recs[r].top, cfg.n, cfg.p);
    }

    const std::uint64_t check_seed = splitmix64(cfg.calibration_seed);
    const auto check_draws = extremes::sample_limit_vector(cfg.k, cfg.region_check_draws, check_seed);

    for (double alpha : cfg.alphas) {
        std::vector<bool> rej(reps);
        const double q = norming::jiang_quantile(alpha);
        for (std::size_t r = 0; r < reps; ++r) rej[r] = extremes::jiang_test(jiang_cov[r], alpha).reject;
        sum.rates.push_back(rate_row("jiang cov", alpha, q, rej));
        for (std::size_t r = 0; r < reps; ++r) rej[r] = extremes::jiang_test(jiang_corr[r], alpha).reject;
        sum.rates.push_back(rate_row("jiang corr", alpha, q, rej));

        for (int kind = 0; kind < 3; ++kind) {
            const extremes::SpacingSpec sp{static_cast<extremes::SpacingKind>(kind), cfg.k};
            const double qs = extremes::spacing_limit_quantile(sp, alpha, cfg.calibration_draws, cfg.calibration_seed);
            for (std::size_t r = 0; r < reps; ++r) rej[r] = spacing[kind][r] >= qs;
            sum.rates.push_back(rate_row("spacing " + extremes::to_string(sp.kind) + " k=" + std::to_string(cfg.k),
                                         alpha, qs, rej));
            sum.quantiles.push_back({"spacing limit " + extremes::to_string(sp.kind) + " k=" + std::to_string(cfg.k),
                                     1.0 - alpha, qs, kNaN, kNaN});
        }

        const auto region = extremes::calibrate_default_region(cfg.k, alpha, cfg.calibration_draws, cfg.calibration_seed);
        const auto pred = region.as_region();
        for (std::size_t r = 0; r < reps; ++r) rej[r] = extremes::region_test(points[r], pred, alpha).reject;
        sum.rates.push_back(rate_row("region k=" + std::to_string(cfg.k), alpha, 1.0, rej));

        std::vector<bool> self(check_draws.size());
        for (std::size_t d = 0; d < check_draws.size(); ++d)
            self[d] = extremes::region_test(check_draws[d].values, pred, alpha).reject;
        sum.rates.push_back(rate_row("region self-check k=" + std::to_string(cfg.k), alpha, 1.0, self));
    }

    if (cfg.k == 2) {
        // The k = 2 spacing limit log(U_(1)/U_(2)) is standard exponential.
        sum.ks.push_back({"spacing T1 k=2", "exp(1)",
                          ks_against(spacing[0], [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }), reps,
                          cfg.tol_ks});
    }
    sum.notes.push_back("region A_k^alpha: default rectangular calibration (Bonferroni start, bisection on band level), "
                        "calibration seed " + std::to_string(cfg.calibration_seed) + ", draws " +
                        std::to_string(cfg.calibration_draws));
    sum.notes.push_back("Jiang thresholds use the non-standard Gumbel limit; spacing/region thresholds use the "
                        "Poisson-limit functionals");
    sum.series = {{"jiang_cov", jiang_cov}, {"jiang_corr", jiang_corr}, {"T1", spacing[0]}, {"T2", spacing[1]},
                  {"T3", spacing[2]}};
    return sum;
}

// ---------------------------------------------------------------------------
// Row-sum and diagonal experiments.

struct RowRecord {
    std::vector<std::uint32_t> counts;
    double max_point = 0.0;
};

MCSummary random_walk_impl(const ExperimentConfig& cfg, std::size_t workers) {
    const double d = norming::d_p(cfg.p);
    const double root_n = std::sqrt(static_cast<double>(cfg.n));
    auto recs = run_replicates<RowRecord>(cfg, workers, [&](std::size_t r) {
        rng::RandomStream stream(cfg.master_seed, r);
        const DataMatrix x = sample_matrix(cfg.spec, cfg.p, cfg.n, stream);
        std::vector<double> sums(cfg.p, 0.0);
        for (std::size_t t = 0; t < cfg.n; ++t) {
            const auto obs = x.observation(t);
            for (std::size_t i = 0; i < cfg.p; ++i) sums[i] += obs[i];
        }
        std::vector<NormedPoint> pts(cfg.p);
        RowRecord rec;
        rec.max_point = -kInf;
        for (std::size_t i = 0; i < cfg.p; ++i) {
            pts[i] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), d * (sums[i] / root_n - d)};
            rec.max_point = std::max(rec.max_point, pts[i].value);
        }
        count_windows(pts, cfg.windows, rec.counts);
        return rec;
    });

    MCSummary sum;
    sum.functional = Functional::random_walk;
    std::vector<std::vector<std::uint32_t>> counts;
    for (const auto& r : recs) counts.push_back(r.counts);
    const double pd = static_cast<double>(cfg.p);
    for (std::size_t w = 0; w < cfg.windows.size(); ++w) {
        const auto& win = cfg.windows[w];
        auto row = window_row("row sums", win, column(counts, w), norming::mean_measure(win.a, win.b), cfg.tol_window);
        if (cfg.spec.family == Family::gaussian) {
            // Gaussian row sums are exactly N(0, n): each count is Binomial(p, q).
            const double upper = std::isinf(win.b) ? 0.0 : norming::std_normal_tail(d + win.b / d);
            const double q = norming::std_normal_tail(d + win.a / d) - upper;
            row.exact_target = pd * q;
            row.exact_sd = std::sqrt(pd * q * (1.0 - q) / static_cast<double>(cfg.replicates));
        }
        sum.windows.push_back(row);
    }
    const auto mx = gather(recs, [](const RowRecord& r) { return r.max_point; });
    sum.ks.push_back({"row-sum max", "gumbel", ks_against(mx, norming::gumbel_cdf), mx.size(), cfg.tol_ks});
    sum.series = {{"max_point", mx}};
    return sum;
}

MCSummary diag_impl(const ExperimentConfig& cfg, bool heavy, std::size_t workers) {
    if (!heavy && !(cfg.spec.var_x2 > 0.0 && std::isfinite(cfg.spec.var_x2)))
        throw DomainError("diag_gumbel needs 0 < Var(X^2) < inf; refusing family " + cfg.spec.name());
    if (heavy && !cfg.spec.regularly_varying())
        throw DomainError("diag_frechet needs a regularly varying entry law; got " + cfg.spec.name());

    const double a_np = heavy ? a_quantile(cfg.spec, static_cast<double>(cfg.n) * static_cast<double>(cfg.p)) : 0.0;
    auto recs = run_replicates<RowRecord>(cfg, workers, [&](std::size_t r) {
        rng::RandomStream stream(cfg.master_seed, r);
        const DataMatrix x = sample_matrix(cfg.spec, cfg.p, cfg.n, stream);
        const auto diag = kernels::gram_diagonal(x);
        const auto pts = heavy ? kernels::heavy_tail_diag_points(diag, cfg.n, a_np)
                               : kernels::diagonal_points(diag, cfg.n, cfg.spec.var_x2);
        RowRecord rec;
        rec.max_point = -kInf;
        for (const auto& pt : pts) rec.max_point = std::max(rec.max_point, pt.value);
        count_windows(pts, cfg.windows, rec.counts);
        return rec;
    });

    MCSummary sum;
    sum.functional = heavy ? Functional::diag_frechet : Functional::diag_gumbel;
    std::vector<std::vector<std::uint32_t>> counts;
    for (const auto& r : recs) counts.push_back(r.counts);
    const double shape = heavy ? cfg.spec.param / 2.0 : 0.0;
    for (std::size_t w = 0; w < cfg.windows.size(); ++w) {
        const auto& win = cfg.windows[w];
        double target = norming::mean_measure(win.a, win.b);
        if (heavy) {
            // mu_alpha(x, inf) = x^{-alpha/2} on (0, inf)
            const auto tail = [&](double v) { return v <= 0.0 ? kInf : std::pow(v, -shape); };
            target = std::isinf(win.b) ? tail(win.a) : tail(win.a) - tail(win.b);
        }
        sum.windows.push_back(window_row("diag", win, column(counts, w), target, cfg.tol_window));
    }
    const auto mx = gather(recs, [](const RowRecord& r) { return r.max_point; });
    if (heavy) {
        sum.ks.push_back({"diag max", "frechet(" + std::to_string(shape) + ")",
                          ks_against(mx, [shape](double v) { return norming::frechet_cdf(v, shape); }), mx.size(),
                          cfg.tol_ks});
        sum.notes.push_back("a_np = " + std::to_string(a_np) + " from the pure-Pareto tail");
    } else {
        sum.ks.push_back({"diag max", "gumbel", ks_against(mx, norming::gumbel_cdf), mx.size(), cfg.tol_ks});
    }
    sum.series = {{"max_point", mx}};
    return sum;
}

MCSummary ld_ratio_impl(const ExperimentConfig& cfg, std::size_t workers) {
    const double root_n = std::sqrt(static_cast<double>(cfg.n));
    auto recs = run_replicates<RowRecord>(cfg, workers, [&](std::size_t r) {
        rng::RandomStream stream(cfg.master_seed, r);
        const DataMatrix x = sample_matrix(cfg.spec, cfg.p, cfg.n, stream);
        std::vector<double> sums(cfg.p, 0.0);
        for (std::size_t t = 0; t < cfg.n; ++t) {
            const auto obs = x.observation(t);
            for (std::size_t i = 0; i < cfg.p; ++i) sums[i] += obs[i];
        }
        RowRecord rec;
        rec.counts.assign(cfg.ld_grid.size(), 0);
        for (double s : sums)
            for (std::size_t g = 0; g < cfg.ld_grid.size(); ++g) rec.counts[g] += (s / root_n > cfg.ld_grid[g]) ? 1 : 0;
        return rec;
    });

    MCSummary sum;
    sum.functional = Functional::ld_ratio;
    const std::size_t draws = cfg.replicates * cfg.p;
    for (std::size_t g = 0; g < cfg.ld_grid.size(); ++g) {
        std::size_t hits = 0;
        for (const auto& r : recs) hits += r.counts[g];
        const auto [lo, hi] = wilson_interval(hits, draws);
        const double tail = norming::std_normal_tail(cfg.ld_grid[g]);
        const double emp = static_cast<double>(hits) / static_cast<double>(draws);
        sum.ratios.push_back({cfg.ld_grid[g], emp, lo, hi, tail, emp / tail, draws});
    }
    sum.notes.push_back("moderate-range check only; deep tails would need importance sampling");
    return sum;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Functional f) {
    switch (f) {
        case Functional::pp_counts: return "pp_counts";
        case Functional::max_gumbel: return "max_gumbel";
        case Functional::joint_max_min: return "joint_max_min";
        case Functional::squares: return "squares";
        case Functional::diag_gumbel: return "diag_gumbel";
        case Functional::diag_frechet: return "diag_frechet";
        case Functional::random_walk: return "random_walk";
        case Functional::corr_variants: return "corr_variants";
        case Functional::ld_ratio: return "ld_ratio";
        case Functional::rate_check: return "rate_check";
        case Functional::test_size: return "test_size";
    }
    return "?";
}

Functional functional_from_string(const std::string& name) {
    for (int f = 0; f <= static_cast<int>(Functional::test_size); ++f)
        if (to_string(static_cast<Functional>(f)) == name) return static_cast<Functional>(f);
    throw DomainError("unknown functional '" + name + "'");
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.functionals.empty()) throw DomainError("no functional configured");
    if (cfg.replicates < 1) throw DomainError("replicates must be >= 1");
    if (cfg.n < 1) throw DomainError("n must be >= 1");
    const bool offdiag = std::any_of(cfg.functionals.begin(), cfg.functionals.end(), uses_offdiag);
    if (offdiag && cfg.p < 3) throw DomainError("off-diagonal functionals require p >= 3");
    if (cfg.p < 2) throw DomainError("p must be >= 2");
    for (const auto& w : cfg.windows)
        if (!(w.a <= w.b)) throw DomainError("window endpoints must satisfy a <= b");
    for (double a : cfg.alphas)
        if (!(a > 0.0 && a < 1.0)) throw DomainError("alpha values must lie in (0, 1)");
    if (contains(cfg.functionals, Functional::test_size)) {
        if (cfg.k < 2) throw DomainError("test_size needs k >= 2");
        if (cfg.k > cfg.p * (cfg.p - 1) / 2) throw DomainError("k exceeds the number of off-diagonal pairs");
    }
    if (contains(cfg.functionals, Functional::rate_check) && !(cfg.threshold_C > 0.0))
        throw DomainError("threshold constant C must be positive");
}

std::size_t working_set_bytes(const ExperimentConfig& cfg) {
    const std::size_t data = cfg.p * cfg.n * sizeof(double);
    const bool offdiag = std::any_of(cfg.functionals.begin(), cfg.functionals.end(), uses_offdiag);
    if (!offdiag) return data + 2 * cfg.p * sizeof(NormedPoint);
    const auto needs = needs_for(cfg.functionals);
    const std::size_t square = cfg.p * cfg.p * sizeof(double);
    std::size_t matrices = 1 + (needs.corr ? 1 : 0) + (needs.threshold ? 3 : 0);
    const std::size_t points = cfg.p * (cfg.p - 1) / 2 * sizeof(NormedPoint);
    return data + matrices * square + points;
}

std::vector<std::string> growth_warnings(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    const double p = static_cast<double>(cfg.p);
    const double n = static_cast<double>(cfg.n);
    const auto& mc = cfg.spec.moment_class;
    const bool offdiag = std::any_of(cfg.functionals.begin(), cfg.functionals.end(), uses_offdiag);

    if (mc.kind == MomentKind::C1 || mc.kind == MomentKind::RV) {
        // Largest usable moment order is just below the index.
        const double s = mc.index;
        if (offdiag && p > std::pow(n, (s - 2.0) / 4.0))
            out.push_back("p exceeds n^((s-2)/4) for s -> " + std::to_string(s) +
                          ": off-diagonal limits may not apply at this (p, n)");
        if (contains(cfg.functionals, Functional::random_walk) && p > std::pow(n, (s - 2.0) / 2.0))
            out.push_back("p exceeds n^((s-2)/2): random-walk limit may not apply");
        if (contains(cfg.functionals, Functional::diag_gumbel) && (s <= 4.0 || p > std::pow(n, (s - 4.0) / 4.0)))
            out.push_back("diagonal Gumbel limit needs s > 4 and p = O(n^((s-4)/4))");
    } else if (std::log(p) > std::cbrt(n)) {
        out.push_back("log p exceeds n^(1/3): growth condition exp(o(n^(1/3))) is violated");
    }
    if (contains(cfg.functionals, Functional::diag_frechet) && mc.kind == MomentKind::RV && !(mc.index > 2.0 && mc.index < 4.0))
        out.push_back("Frechet limit for the diagonal is stated for tail index in (2, 4)");
    if (contains(cfg.functionals, Functional::rate_check) && cfg.threshold_C <= 2.0)
        out.push_back("threshold constant C <= 2: consistency is only guaranteed for C > 2");
    return out;
}

const Series* MCSummary::find_series(const std::string& name) const {
    for (const auto& s : series)
        if (s.name == name) return &s;
    return nullptr;
}

const KsRow* MCSummary::find_ks(const std::string& label) const {
    for (const auto& k : ks)
        if (k.label == label) return &k;
    return nullptr;
}

double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
    if (sorted.empty()) throw DomainError("ks_statistic of an empty sample");
    const double m = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double nt = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / nt;
    const double z2 = z * z;
    const double centre = (ph + z2 / (2.0 * nt)) / (1.0 + z2 / nt);
    const double half = z * std::sqrt(ph * (1.0 - ph) / nt + z2 / (4.0 * nt * nt)) / (1.0 + z2 / nt);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t r = 0; r < count; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (!failed.load(std::memory_order_relaxed)) {
                    const std::size_t r = next.fetch_add(1, std::memory_order_relaxed);
                    if (r >= count) return;
                    try {
                        body(r);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

std::vector<MCSummary> run_experiment(const ExperimentConfig& cfg, std::size_t workers) {
    validate(cfg);
    workers = std::max<std::size_t>(1, workers);
    const std::size_t need = working_set_bytes(cfg) * workers;
    if (need > cfg.memory_cap_bytes)
        throw ResourceError("experiment needs " + std::to_string(need) + " bytes with " + std::to_string(workers) +
                            " workers; cap is " + std::to_string(cfg.memory_cap_bytes));

    const auto warnings = growth_warnings(cfg);
    std::vector<MCSummary> out;

    std::vector<Functional> offdiag;
    for (auto f : cfg.functionals)
        if (uses_offdiag(f)) offdiag.push_back(f);

    std::vector<OffdiagRecord> recs;
    double offdiag_seconds = 0.0;
    if (!offdiag.empty()) {
        const auto needs = needs_for(offdiag);
        const auto start = std::chrono::steady_clock::now();
        recs = run_replicates<OffdiagRecord>(cfg, workers, [&](std::size_t r) { return offdiag_replicate(cfg, needs, r); });
        offdiag_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    for (auto f : cfg.functionals) {
        const auto start = std::chrono::steady_clock::now();
        MCSummary sum;
        switch (f) {
            case Functional::pp_counts: sum = summarize_pp(cfg, recs); break;
            case Functional::max_gumbel: sum = summarize_max(cfg, recs); break;
            case Functional::joint_max_min: sum = summarize_joint(cfg, recs); break;
            case Functional::squares: sum = summarize_squares(cfg, recs); break;
            case Functional::corr_variants: sum = summarize_corr(cfg, recs); break;
            case Functional::rate_check: sum = summarize_rate_check(cfg, recs); break;
            case Functional::test_size: sum = summarize_test_size(cfg, recs); break;
            case Functional::random_walk: sum = random_walk_impl(cfg, workers); break;
            case Functional::diag_gumbel: sum = diag_impl(cfg, false, workers); break;
            case Functional::diag_frechet: sum = diag_impl(cfg, true, workers); break;
            case Functional::ld_ratio: sum = ld_ratio_impl(cfg, workers); break;
        }
        sum.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() +
                              (uses_offdiag(f) ? offdiag_seconds : 0.0);
        sum.notes.insert(sum.notes.begin(), warnings.begin(), warnings.end());
        out.push_back(std::move(sum));
    }
    return out;
}

namespace {

ExperimentConfig with_functionals(ExperimentConfig cfg, std::vector<Functional> fs) {
    cfg.functionals = std::move(fs);
    return cfg;
}

}  // namespace

MCSummary run_pp_experiment(const ExperimentConfig& cfg, std::size_t workers) {
    return run_experiment(with_functionals(cfg, {Functional::pp_counts}), workers).front();
}

MCSummary run_max_experiment(const ExperimentConfig& cfg, std::size_t workers) {
    // Joint max/min cells ride along with the marginal summary.
    auto sums = run_experiment(with_functionals(cfg, {Functional::max_gumbel, Functional::joint_max_min}), workers);
    MCSummary out = std::move(sums[0]);
    out.cells = std::move(sums[1].cells);
    return out;
}

MCSummary run_random_walk_experiment(const ExperimentConfig& cfg, std::size_t workers) {
    return run_experiment(with_functionals(cfg, {Functional::random_walk}), workers).front();
}

MCSummary run_diag_experiments(const ExperimentConfig& cfg, bool heavy_tail, std::size_t workers) {
    return run_experiment(
               with_functionals(cfg, {heavy_tail ? Functional::diag_frechet : Functional::diag_gumbel}), workers)
        .front();
}

MCSummary run_ld_ratio(const ExperimentConfig& cfg, std::size_t workers) {
    return run_experiment(with_functionals(cfg, {Functional::ld_ratio}), workers).front();
}

MCSummary run_test_size(const ExperimentConfig& cfg, std::size_t workers) {
    return run_experiment(with_functionals(cfg, {Functional::test_size}), workers).front();
}

}  // namespace covx::sim
