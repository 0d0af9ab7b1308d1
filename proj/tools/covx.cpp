// covx: compute, test, simulate, report.

#include "covx/config.hpp"
#include "covx/covkernels.hpp"
#include "covx/errors.hpp"
#include "covx/extremes.hpp"
#include "covx/io.hpp"
#include "covx/norming.hpp"
#include "covx/simharness.hpp"
#include "covx/thresholding.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#ifndef COVX_VERSION
#define COVX_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace covx;

namespace {

enum ExitCode { ok = 0, other = 1, parse = 2, domain = 3, resource = 4, nonconvergence = 5 };

constexpr const char* kOutEnv = "COVX_OUT_DIR";

struct Options {
    std::string config;
    std::string input;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::size_t k = 2;
    double alpha = 0.05;
    std::string mode = "cov";
    double C = 2.5;
    bool threshold = false;
    std::string test = "jiang";
    std::size_t mc_count = 200000;
};

fs::path resolve_out(const Options& o, const std::optional<std::string>& from_config) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    if (from_config) return *from_config;
    return "covx_out";
}

class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, const std::string& content) {
        io::atomic_write(dir_ / name, content);
        files_.push_back({name, io::sha256_hex(content)});
    }

    const fs::path& dir() const { return dir_; }
    const std::vector<io::ManifestEntry>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<io::ManifestEntry> files_;
};

void write_manifest(OutputSet& out, io::Manifest m) {
    m.version = COVX_VERSION;
    m.finished = io::utc_timestamp();
    m.files = out.files();
    io::atomic_write(out.dir() / "manifest.txt", io::format_manifest(m));
}

bool corr_mode(const Options& o) {
    if (o.mode == "cov") return false;
    if (o.mode == "corr") return true;
    throw DomainError("--mode must be cov or corr");
}

int cmd_compute(const Options& o) {
    io::Manifest manifest;
    manifest.command = "compute";
    manifest.started = io::utc_timestamp();
    const bool corr = corr_mode(o);

    const DataMatrix x = io::read_matrix(o.input);
    const std::size_t p = x.p();
    const std::size_t n = x.n();
    OutputSet out(resolve_out(o, std::nullopt));

    const GramMatrix s = kernels::gram(x);
    out.add("S.txt", io::format_matrix(s));
    std::optional<SymMatrix> r;
    if (corr) {
        r = kernels::correlation(s);
        out.add("R.txt", io::format_matrix(*r));
    }
    const SymMatrix& target = corr ? *r : s;

    if (p >= 2) {
        const std::size_t pairs = p * (p - 1) / 2;
        if (o.k < 1 || o.k > pairs)
            throw DomainError("--k must lie in [1, " + std::to_string(pairs) + "]");
        out.add("extremes.csv", io::extremes_csv(kernels::offdiag_extremes(target, o.k)));
    }
    if (p < 3) throw DomainError("normalized points require p >= 3 (got p = " + std::to_string(p) + ")");
    out.add("points.csv", io::points_csv(corr ? kernels::normalized_corr_points(*r, n)
                                              : kernels::normalized_offdiag_points(s, n)));

    if (o.threshold) {
        const auto spec = thresholding::ThresholdSpec::make(o.C, n, p);
        const auto est = corr ? thresholding::threshold_corr(*r, spec) : thresholding::threshold_cov(s, spec);
        out.add(corr ? "R_hat.txt" : "S_hat.txt", io::format_matrix(est.matrix));
        const double metric = thresholding::consistency_metric(
            est.matrix, corr ? thresholding::EstimateKind::corr : thresholding::EstimateKind::cov, n, p);
        io::CsvWriter w({"C", "t_n", "metric"});
        w.cell(o.C).cell(spec.t_n).cell(metric);
        w.end_row();
        out.add("threshold.csv", w.str());
        for (const auto& warn : est.warnings) {
            std::cerr << "warning: " << warn << "\n";
            manifest.notes.push_back(warn);
        }
    }

    manifest.config = {{"input", o.input}, {"mode", o.mode}, {"k", std::to_string(o.k)},
                       {"p", std::to_string(p)}, {"n", std::to_string(n)}};
    if (o.threshold) manifest.config.emplace_back("C", io::format_real(o.C));
    write_manifest(out, manifest);
    std::cout << "wrote " << out.files().size() << " files to " << out.dir().string() << "\n";
    return ok;
}

int cmd_test(const Options& o) {
    io::Manifest manifest;
    manifest.command = "test";
    manifest.started = io::utc_timestamp();
    const bool corr = corr_mode(o);
    const std::uint64_t seed = o.seed.value_or(0);

    const DataMatrix x = io::read_matrix(o.input);
    const std::size_t p = x.p();
    const std::size_t n = x.n();
    if (p < 3) throw DomainError("tests require p >= 3");
    const GramMatrix s = kernels::gram(x);
    std::optional<SymMatrix> r;
    if (corr) r = kernels::correlation(s);
    const double nd = static_cast<double>(n);

    io::CsvWriter w({"test", "mode", "k", "alpha", "statistic", "threshold", "decision", "seed", "mc_count"});
    const auto row = [&](const std::string& name, const extremes::TestDecision& d, bool mc) {
        w.cell(name).cell(o.mode).cell(std::uint64_t{o.k}).cell(d.alpha).cell(d.statistic).cell(d.threshold)
            .cell(d.reject ? "reject" : "accept");
        if (mc) w.cell(seed).cell(std::uint64_t{o.mc_count});
        else w.cell("").cell("");
        w.end_row();
    };

    OutputSet out(resolve_out(o, std::nullopt));
    if (o.test == "jiang") {
        const auto ext = kernels::offdiag_extremes(corr ? *r : s, 1);
        const double mx = std::max(std::abs(ext.top.entries[0].value), std::abs(ext.bottom.entries[0].value));
        const double maxabs = corr ? mx : mx / nd;
        const double stat = extremes::jiang_statistic(
            maxabs, n, p, corr ? extremes::StatMode::correlation : extremes::StatMode::covariance);
        row("jiang", extremes::jiang_test(stat, o.alpha), false);
    } else if (o.test == "spacing" || o.test == "region") {
        if (o.k < 2) throw DomainError("--k must be >= 2 for spacing and region tests");
        const auto ext = kernels::offdiag_extremes(corr ? *r : s, o.k);
        // Correlations enter on the S scale: sqrt(n) R_(i) = (n R_(i)) / sqrt(n).
        std::vector<double> top = ext.top.values();
        if (corr)
            for (auto& v : top) v *= nd;
        if (o.test == "spacing") {
            for (auto kind : {extremes::SpacingKind::T1, extremes::SpacingKind::T2, extremes::SpacingKind::T3}) {
                const extremes::SpacingSpec spec{kind, o.k};
                const double stat = extremes::spacing_statistic(top, n, p, spec);
                const double q = extremes::spacing_limit_quantile(spec, o.alpha, o.mc_count, seed);
                row("spacing_" + extremes::to_string(kind), {stat, q, o.alpha, stat >= q}, true);
            }
            out.add("quantile_table.csv", io::quantile_table_csv(extremes::quantile_table()));
        } else {
            const auto region = extremes::calibrate_default_region(o.k, o.alpha, o.mc_count, seed);
            const auto pts = extremes::normalized_top_points(top, n, p);
            row("region", extremes::region_test(pts, region.as_region(), o.alpha), true);
            io::CsvWriter rw({"coordinate", "lower", "upper", "band_level", "coverage", "draws", "seed"});
            for (std::size_t i = 0; i < region.lower.size(); ++i) {
                rw.cell(std::uint64_t{i + 1}).cell(region.lower[i]).cell(region.upper[i]).cell(region.band_level)
                    .cell(region.coverage).cell(std::uint64_t{region.draws}).cell(region.seed);
                rw.end_row();
            }
            out.add("region.csv", rw.str());
        }
    } else {
        throw DomainError("--test must be jiang, spacing or region");
    }

    out.add("test_report.csv", w.str());
    std::cout << w.str();
    manifest.seed = seed;
    manifest.config = {{"input", o.input}, {"test", o.test}, {"mode", o.mode}, {"k", std::to_string(o.k)},
                       {"alpha", io::format_real(o.alpha)}, {"mc_count", std::to_string(o.mc_count)}};
    write_manifest(out, manifest);
    return ok;
}

int cmd_simulate(const Options& o) {
    io::Manifest manifest;
    manifest.command = "simulate";
    manifest.started = io::utc_timestamp();

    auto rc = config::load(o.config);
    if (o.seed) {
        const bool tied = rc.experiment.calibration_seed == rc.experiment.master_seed;
        rc.experiment.master_seed = *o.seed;
        if (tied) rc.experiment.calibration_seed = *o.seed;
    }
    if (o.workers) rc.workers = *o.workers;
    OutputSet out(resolve_out(o, rc.output_dir));

    const auto summaries = sim::run_experiment(rc.experiment, rc.workers);
    for (const auto& sum : summaries) {
        const std::string base = sim::to_string(sum.functional);
        out.add(base + ".csv", io::summary_csv(sum));
        if (!sum.series.empty()) out.add(base + "_series.csv", io::series_csv(sum));
        for (const auto& note : sum.notes) manifest.notes.push_back(base + ": " + note);
        manifest.notes.push_back(base + ": runtime_seconds " + io::format_real(sum.runtime_seconds));
        std::cout << base << ": " << sum.windows.size() + sum.ks.size() + sum.quantiles.size() + sum.rates.size() +
                                         sum.cells.size() + sum.ratios.size()
                  << " rows\n";
    }
    const auto table = extremes::quantile_table();
    if (!table.empty()) out.add("quantile_table.csv", io::quantile_table_csv(table));

    manifest.seed = rc.experiment.master_seed;
    manifest.config = config::echo(rc);
    write_manifest(out, manifest);
    std::cout << "wrote " << out.files().size() << " files to " << out.dir().string() << "\n";
    return ok;
}

// Prints the tables of a finished run and re-verifies every digest.
int cmd_report(const Options& o) {
    const fs::path dir = resolve_out(o, std::nullopt);
    const auto manifest = io::parse_manifest(io::read_file(dir / "manifest.txt"));
    std::cout << "command " << manifest.command << ", version " << manifest.version << ", seed " << manifest.seed
              << "\n"
              << "started " << manifest.started << ", finished " << manifest.finished << "\n";
    for (const auto& [k, v] : manifest.config) std::cout << "  " << k << " = " << v << "\n";
    for (const auto& n : manifest.notes) std::cout << "note: " << n << "\n";

    bool intact = true;
    for (const auto& f : manifest.files) {
        const std::string content = io::read_file(dir / f.file);
        const bool match = io::sha256_hex(content) == f.sha256;
        intact = intact && match;
        std::cout << "\n== " << f.file << (match ? "" : "  [DIGEST MISMATCH]") << "\n";
        if (f.file.ends_with(".csv") && !f.file.ends_with("_series.csv")) std::cout << content;
    }
    return intact ? ok : other;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extreme-value statistics of high-dimensional sample covariance matrices"};
    app.set_version_flag("--version", std::string(COVX_VERSION));
    app.require_subcommand(1);
    Options o;

    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, std::string("Output directory (overrides ") + kOutEnv + ")");
    };

    auto* compute = app.add_subcommand("compute", "Gram/correlation matrices, extremes and normalized points");
    compute->add_option("--input", o.input, "Matrix file (`p n` header, p rows)")->required();
    compute->add_option("--mode", o.mode, "cov or corr")->check(CLI::IsMember({"cov", "corr"}));
    compute->add_option("--k", o.k, "Number of top/bottom entries");
    compute->add_flag("--threshold", o.threshold, "Also write the hard-threshold estimate");
    compute->add_option("--C", o.C, "Threshold constant");
    add_out(compute);

    auto* test = app.add_subcommand("test", "Independence tests on a data matrix");
    test->add_option("--input", o.input, "Matrix file")->required();
    test->add_option("--test", o.test, "jiang, spacing or region")->check(CLI::IsMember({"jiang", "spacing", "region"}));
    test->add_option("--alpha", o.alpha, "Significance level");
    test->add_option("--k", o.k, "Number of order statistics");
    test->add_option("--mode", o.mode, "cov or corr")->check(CLI::IsMember({"cov", "corr"}));
    test->add_option("--seed", o.seed, "Seed of the limit-law calibration");
    test->add_option("--mc-count", o.mc_count, "Monte Carlo draws for limit quantiles");
    add_out(test);

    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a config file");
    simulate->add_option("--config", o.config, "Config file")->required();
    simulate->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", o.seed, "Override experiment.seed");
    add_out(simulate);

    auto* report = app.add_subcommand("report", "Print and verify the outputs of a previous run");
    add_out(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : parse;
    }

    try {
        if (*compute) return cmd_compute(o);
        if (*test) return cmd_test(o);
        if (*simulate) return cmd_simulate(o);
        if (*report) return cmd_report(o);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return parse;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return domain;
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return resource;
    } catch (const NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << " (last estimate " << io::format_real(e.last_estimate())
                  << ")\n";
        return nonconvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }
    return other;
}
