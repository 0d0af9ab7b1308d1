#pragma once

// Text formats: matrix files, CSV tables, run manifests.
//
// Matrix file: a header line `p n`, then p rows of n whitespace-separated
// decimal values. `#` starts a comment that runs to the end of the line.
// Every real written by this module uses 17 significant digits, so values
// survive a write/read round trip bit for bit.

#include "covx/covkernels.hpp"
#include "covx/extremes.hpp"
#include "covx/matrix.hpp"
#include "covx/simharness.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace covx::io {

/// "%.17g", with inf / -inf / nan spelled out.
std::string format_real(double v);

DataMatrix parse_matrix(std::string_view text);
DataMatrix read_matrix(const std::filesystem::path& path);

std::string format_matrix(const DataMatrix& x);
std::string format_matrix(const SymMatrix& m);

/// Reads a square matrix file as a symmetric matrix; throws ParseError if it
/// is not square and DomainError if it is not exactly symmetric.
SymMatrix parse_sym_matrix(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`. A failed
/// write never leaves a partial file behind.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Lower-case hex SHA-256 of `content`.
std::string sha256_hex(std::string_view content);

/// Minimal CSV builder. Fields containing separators or quotes are quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& cell(std::string_view v);
    CsvWriter& cell(double v);
    CsvWriter& cell(std::uint64_t v);
    void end_row();

    const std::string& str() const noexcept { return out_; }

private:
    std::size_t columns_;
    std::size_t filled_ = 0;
    std::string out_;
};

// Table encodings. Indices in these tables are 1-based.
std::string points_csv(const std::vector<kernels::NormedPoint>& points);
std::string extremes_csv(const kernels::Extremes& ext);
std::string summary_csv(const sim::MCSummary& summary);
std::string series_csv(const sim::MCSummary& summary);
std::string quantile_table_csv(const std::vector<extremes::QuantileTableRow>& rows);

struct ManifestEntry {
    std::string file;
    std::string sha256;
};

struct Manifest {
    std::string version;
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::string> notes;
    std::vector<ManifestEntry> files;
};

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace covx::io
