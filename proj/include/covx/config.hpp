#pragma once

// Flat `key = value` experiment configuration files.
//
//   # comment
//   distribution.family = gaussian
//   distribution.param = 0
//   experiment.p = 100
//   experiment.n = 2000
//   experiment.replicates = 1000
//   experiment.seed = 20240607
//   experiment.functionals = max_gumbel, joint_max_min
//   experiment.workers = 1
//   output.dir = out/run
//   windows = 0:inf, 1:inf
//   cells = 0:0, 0:1, 1:0, 1:1
//   ld.grid = 0, 0.5, 1
//   test.alphas = 0.01, 0.05, 0.1
//   test.k = 2
//   test.calibration_seed = 7
//   test.calibration_draws = 200000
//   test.region_check_draws = 10000
//   threshold.C = 2.5
//   tolerance.window / tolerance.ks / tolerance.cell / tolerance.rate_median
//   resources.memory_cap_bytes = 4294967296
//
// experiment.seed is mandatory. Unknown keys are rejected.

#include "covx/simharness.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace covx::config {

struct RunConfig {
    sim::ExperimentConfig experiment;
    std::size_t workers = 1;
    std::optional<std::string> output_dir;
    /// Key/value pairs in file order, for the manifest echo.
    std::vector<std::pair<std::string, std::string>> entries;
};

/// Throws ParseError (with line number) on syntax errors and unknown keys,
/// and DomainError on out-of-range values.
RunConfig parse(std::string_view text);
RunConfig load(const std::filesystem::path& path);

/// Resolved configuration as key/value pairs, suitable for the manifest.
std::vector<std::pair<std::string, std::string>> echo(const RunConfig& config);

}  // namespace covx::config
