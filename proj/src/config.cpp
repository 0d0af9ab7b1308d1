#include "covx/config.hpp"

#include "covx/errors.hpp"
#include "covx/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

namespace covx::config {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        s = s.substr(comma + 1);
    }
    return out;
}

double to_real(std::string_view v, std::size_t line) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || std::isnan(out))
        throw ParseError("expected a number, got '" + std::string(v) + "'", line);
    return out;
}

std::uint64_t to_u64(std::string_view v, std::size_t line) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ParseError("expected a non-negative integer, got '" + std::string(v) + "'", line);
    return out;
}

std::pair<double, double> to_pair(std::string_view v, std::size_t line) {
    const auto colon = v.find(':');
    if (colon == std::string_view::npos) throw ParseError("expected `a:b`, got '" + std::string(v) + "'", line);
    return {to_real(trim(v.substr(0, colon)), line), to_real(trim(v.substr(colon + 1)), line)};
}

}  // namespace

RunConfig parse(std::string_view text) {
    RunConfig rc;
    auto& e = rc.experiment;
    std::map<std::string, std::size_t> seen;
    std::string family = "gaussian";
    double param = std::numeric_limits<double>::quiet_NaN();
    std::size_t family_line = 0;
    bool have_seed = false;
    bool have_calibration_seed = false;

    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected `key = value`", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (value.empty()) throw ParseError("empty value for '" + key + "'", line_no);
        if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
            throw ParseError("duplicate key '" + key + "' (first on line " + std::to_string(it->second) + ")", line_no);
        rc.entries.emplace_back(key, std::string(value));

        if (key == "distribution.family") {
            family = std::string(value);
            family_line = line_no;
        } else if (key == "distribution.param") {
            param = to_real(value, line_no);
        } else if (key == "experiment.p") {
            e.p = to_u64(value, line_no);
        } else if (key == "experiment.n") {
            e.n = to_u64(value, line_no);
        } else if (key == "experiment.replicates") {
            e.replicates = to_u64(value, line_no);
        } else if (key == "experiment.seed") {
            e.master_seed = to_u64(value, line_no);
            have_seed = true;
        } else if (key == "experiment.functionals" || key == "experiment.functional") {
            for (auto name : split_list(value)) {
                try {
                    e.functionals.push_back(sim::functional_from_string(std::string(name)));
                } catch (const DomainError& err) {
                    throw ParseError(err.what(), line_no);
                }
            }
        } else if (key == "experiment.workers") {
            rc.workers = to_u64(value, line_no);
            if (rc.workers == 0) throw ParseError("experiment.workers must be >= 1", line_no);
        } else if (key == "output.dir") {
            rc.output_dir = std::string(value);
        } else if (key == "windows") {
            e.windows.clear();
            for (auto item : split_list(value)) {
                const auto [a, b] = to_pair(item, line_no);
                e.windows.push_back({a, b});
            }
        } else if (key == "cells") {
            e.cells.clear();
            for (auto item : split_list(value)) {
                const auto [x, y] = to_pair(item, line_no);
                e.cells.push_back({x, y});
            }
        } else if (key == "ld.grid") {
            e.ld_grid.clear();
            for (auto item : split_list(value)) e.ld_grid.push_back(to_real(item, line_no));
        } else if (key == "test.alphas") {
            e.alphas.clear();
            for (auto item : split_list(value)) e.alphas.push_back(to_real(item, line_no));
        } else if (key == "test.k") {
            e.k = to_u64(value, line_no);
        } else if (key == "test.calibration_seed") {
            e.calibration_seed = to_u64(value, line_no);
            have_calibration_seed = true;
        } else if (key == "test.calibration_draws") {
            e.calibration_draws = to_u64(value, line_no);
        } else if (key == "test.region_check_draws") {
            e.region_check_draws = to_u64(value, line_no);
        } else if (key == "threshold.C") {
            e.threshold_C = to_real(value, line_no);
        } else if (key == "tolerance.window") {
            e.tol_window = to_real(value, line_no);
        } else if (key == "tolerance.ks") {
            e.tol_ks = to_real(value, line_no);
        } else if (key == "tolerance.cell") {
            e.tol_cell = to_real(value, line_no);
        } else if (key == "tolerance.rate_median") {
            e.tol_rate_median = to_real(value, line_no);
        } else if (key == "resources.memory_cap_bytes") {
            e.memory_cap_bytes = to_u64(value, line_no);
        } else {
            throw ParseError("unknown key '" + key + "'", line_no);
        }
    }

    if (!have_seed) throw ParseError("experiment.seed is required", 0);
    if (!have_calibration_seed) e.calibration_seed = e.master_seed;
    static const std::vector<std::string> families{"gaussian",   "rademacher", "uniform_scaled",
                                                    "student_t", "sym_pareto", "laplace_scaled"};
    if (std::find(families.begin(), families.end(), family) == families.end())
        throw ParseError("unknown distribution family '" + family + "'", family_line);
    e.spec = sim::DistributionSpec::from_name(family, param);
    sim::validate(e);
    return rc;
}

RunConfig load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::vector<std::pair<std::string, std::string>> echo(const RunConfig& rc) {
    const auto& e = rc.experiment;
    const auto join = [](const auto& items, auto&& fmt) {
        std::string out;
        for (const auto& it : items) {
            if (!out.empty()) out += ", ";
            out += fmt(it);
        }
        return out;
    };
    const auto real = [](double v) { return io::format_real(v); };
    std::vector<std::pair<std::string, std::string>> out{
        {"distribution.family", e.spec.name()},
        {"distribution.param", real(e.spec.param)},
        {"distribution.moment_class", e.spec.moment_class.to_string()},
        {"experiment.p", std::to_string(e.p)},
        {"experiment.n", std::to_string(e.n)},
        {"experiment.replicates", std::to_string(e.replicates)},
        {"experiment.seed", std::to_string(e.master_seed)},
        {"experiment.functionals", join(e.functionals, [](sim::Functional f) { return sim::to_string(f); })},
        {"experiment.workers", std::to_string(rc.workers)},
        {"windows", join(e.windows, [&](const sim::Window& w) { return real(w.a) + ":" + real(w.b); })},
        {"cells", join(e.cells, [&](const sim::GridPoint& g) { return real(g.x) + ":" + real(g.y); })},
        {"ld.grid", join(e.ld_grid, real)},
        {"test.alphas", join(e.alphas, real)},
        {"test.k", std::to_string(e.k)},
        {"test.calibration_seed", std::to_string(e.calibration_seed)},
        {"test.calibration_draws", std::to_string(e.calibration_draws)},
        {"test.region_check_draws", std::to_string(e.region_check_draws)},
        {"threshold.C", real(e.threshold_C)},
        {"tolerance.window", real(e.tol_window)},
        {"tolerance.ks", real(e.tol_ks)},
        {"tolerance.cell", real(e.tol_cell)},
        {"tolerance.rate_median", real(e.tol_rate_median)},
        {"resources.memory_cap_bytes", std::to_string(e.memory_cap_bytes)},
    };
    return out;
}

}  // namespace covx::config
