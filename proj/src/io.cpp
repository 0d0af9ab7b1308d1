#include "covx/io.hpp"

#include "covx/errors.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

namespace covx::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

double parse_real(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("not a number: '" + std::string(tok) + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite value: '" + std::string(tok) + "'", line);
    return v;
}

std::size_t parse_dim(std::string_view tok, std::size_t line) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v == 0)
        throw ParseError("dimension must be a positive integer: '" + std::string(tok) + "'", line);
    return v;
}

struct RawMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
};

RawMatrix parse_raw(std::string_view text) {
    RawMatrix m;
    bool have_header = false;
    std::size_t row = 0;
    std::size_t line_no = 0;
    std::size_t last_line = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto toks = split_ws(strip_comment(line));
        if (toks.empty()) continue;
        last_line = line_no;
        if (!have_header) {
            if (toks.size() != 2) throw ParseError("header must be `p n`", line_no);
            m.rows = parse_dim(toks[0], line_no);
            m.cols = parse_dim(toks[1], line_no);
            m.values.reserve(m.rows * m.cols);
            have_header = true;
            continue;
        }
        if (row == m.rows)
            throw ParseError("more than the declared " + std::to_string(m.rows) + " rows", line_no);
        if (toks.size() != m.cols)
            throw ParseError("row " + std::to_string(row + 1) + " has " + std::to_string(toks.size()) +
                                 " values, header declares " + std::to_string(m.cols),
                             line_no);
        for (const auto tok : toks) m.values.push_back(parse_real(tok, line_no));
        ++row;
    }
    if (!have_header) throw ParseError("empty matrix file", line_no == 0 ? 1 : line_no);
    if (row != m.rows)
        throw ParseError("expected " + std::to_string(m.rows) + " rows, found " + std::to_string(row),
                         last_line + 1);
    return m;
}

std::string csv_quote(std::string_view v) {
    if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

DataMatrix parse_matrix(std::string_view text) {
    const RawMatrix raw = parse_raw(text);
    DataMatrix x(raw.rows, raw.cols);
    for (std::size_t i = 0; i < raw.rows; ++i)
        for (std::size_t t = 0; t < raw.cols; ++t) x(i, t) = raw.values[i * raw.cols + t];
    return x;
}

SymMatrix parse_sym_matrix(std::string_view text) {
    const RawMatrix raw = parse_raw(text);
    if (raw.rows != raw.cols) throw ParseError("symmetric matrix file must be square", 1);
    SymMatrix m(raw.rows);
    for (std::size_t i = 0; i < raw.rows; ++i)
        for (std::size_t j = i; j < raw.cols; ++j) {
            const double a = raw.values[i * raw.cols + j];
            if (a != raw.values[j * raw.cols + i]) throw DomainError("matrix is not symmetric");
            m.set(i, j, a);
        }
    return m;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DataMatrix read_matrix(const std::filesystem::path& path) { return parse_matrix(read_file(path)); }

std::string format_matrix(const DataMatrix& x) {
    std::string out = std::to_string(x.p()) + " " + std::to_string(x.n()) + "\n";
    for (std::size_t i = 0; i < x.p(); ++i) {
        for (std::size_t t = 0; t < x.n(); ++t) {
            if (t) out += ' ';
            out += format_real(x(i, t));
        }
        out += '\n';
    }
    return out;
}

std::string format_matrix(const SymMatrix& m) {
    std::string out = std::to_string(m.p()) + " " + std::to_string(m.p()) + "\n";
    for (std::size_t i = 0; i < m.p(); ++i) {
        for (std::size_t j = 0; j < m.p(); ++j) {
            if (j) out += ' ';
            out += format_real(m(i, j));
        }
        out += '\n';
    }
    return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::random_device rd;
    const fs::path tmp = path.string() + ".tmp-" + std::to_string(rd());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot create '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw ResourceError("write failed for '" + path.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw ResourceError("cannot rename into '" + path.string() + "': " + ec.message());
    }
}

std::string sha256_hex(std::string_view content) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw ResourceError("SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out_ += ',';
        out_ += csv_quote(header[c]);
    }
    out_ += '\n';
}

CsvWriter& CsvWriter::cell(std::string_view v) {
    if (filled_ == columns_) throw DomainError("CSV row has too many cells");
    if (filled_) out_ += ',';
    out_ += csv_quote(v);
    ++filled_;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_real(v))); }

CsvWriter& CsvWriter::cell(std::uint64_t v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::end_row() {
    if (filled_ != columns_) throw DomainError("CSV row has too few cells");
    out_ += '\n';
    filled_ = 0;
}

std::string points_csv(const std::vector<kernels::NormedPoint>& points) {
    CsvWriter w({"i", "j", "value"});
    for (const auto& pt : points) {
        w.cell(std::uint64_t{pt.i} + 1).cell(std::uint64_t{pt.j} + 1).cell(pt.value);
        w.end_row();
    }
    return w.str();
}

std::string extremes_csv(const kernels::Extremes& ext) {
    CsvWriter w({"side", "rank", "i", "j", "value"});
    const auto emit = [&](std::string_view side, const kernels::OrderStats& os) {
        for (std::size_t r = 0; r < os.entries.size(); ++r) {
            const auto& e = os.entries[r];
            w.cell(side).cell(std::uint64_t{r + 1}).cell(std::uint64_t{e.i} + 1).cell(std::uint64_t{e.j} + 1).cell(e.value);
            w.end_row();
        }
    };
    emit("top", ext.top);
    emit("bottom", ext.bottom);
    return w.str();
}

std::string summary_csv(const sim::MCSummary& s) {
    CsvWriter w({"functional", "table", "label", "a", "b", "value", "target", "tolerance", "std_error", "ci_low",
                 "ci_high", "sample_size"});
    const std::string fn = sim::to_string(s.functional);
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : s.windows) {
        w.cell(fn).cell("window").cell(r.label).cell(r.a).cell(r.b).cell(r.mean_count).cell(r.target)
            .cell(r.tolerance).cell(r.std_error).cell(nan).cell(nan).cell(std::uint64_t{0});
        w.end_row();
        if (!std::isnan(r.exact_target)) {
            w.cell(fn).cell("window_exact").cell(r.label).cell(r.a).cell(r.b).cell(r.mean_count)
                .cell(r.exact_target).cell(3.0 * r.exact_sd).cell(r.exact_sd).cell(nan).cell(nan)
                .cell(std::uint64_t{0});
            w.end_row();
        }
    }
    for (const auto& r : s.ks) {
        w.cell(fn).cell("ks").cell(r.label + " vs " + r.reference).cell(nan).cell(nan).cell(r.statistic).cell(0.0)
            .cell(r.tolerance).cell(nan).cell(nan).cell(nan).cell(std::uint64_t{r.sample_size});
        w.end_row();
    }
    for (const auto& r : s.quantiles) {
        w.cell(fn).cell("quantile").cell(r.label).cell(r.prob).cell(nan).cell(r.value).cell(r.target)
            .cell(r.tolerance).cell(nan).cell(nan).cell(nan).cell(std::uint64_t{0});
        w.end_row();
    }
    for (const auto& r : s.rates) {
        w.cell(fn).cell("rate").cell(r.label).cell(r.alpha).cell(r.threshold).cell(r.rate).cell(r.alpha)
            .cell(nan).cell(nan).cell(r.ci_low).cell(r.ci_high).cell(std::uint64_t{r.trials});
        w.end_row();
    }
    for (const auto& r : s.cells) {
        w.cell(fn).cell("cell").cell(r.label).cell(r.x).cell(r.y).cell(r.empirical).cell(r.target)
            .cell(r.tolerance).cell(nan).cell(nan).cell(nan).cell(std::uint64_t{0});
        w.end_row();
    }
    for (const auto& r : s.ratios) {
        w.cell(fn).cell("ld_ratio").cell("P(S_n/sqrt(n) > y)").cell(r.y).cell(r.normal_tail).cell(r.empirical_tail)
            .cell(r.normal_tail).cell(nan).cell(nan).cell(r.ci_low).cell(r.ci_high).cell(std::uint64_t{r.draws});
        w.end_row();
    }
    return w.str();
}

std::string series_csv(const sim::MCSummary& s) {
    std::vector<std::string> header{"replicate"};
    std::size_t rows = 0;
    for (const auto& ser : s.series) {
        header.push_back(ser.name);
        rows = std::max(rows, ser.values.size());
    }
    CsvWriter w(header);
    for (std::size_t r = 0; r < rows; ++r) {
        w.cell(std::uint64_t{r});
        for (const auto& ser : s.series)
            w.cell(r < ser.values.size() ? ser.values[r] : std::numeric_limits<double>::quiet_NaN());
        w.end_row();
    }
    return w.str();
}

std::string quantile_table_csv(const std::vector<extremes::QuantileTableRow>& rows) {
    CsvWriter w({"kind", "k", "alpha", "mc_count", "seed", "value"});
    for (const auto& r : rows) {
        w.cell(extremes::to_string(r.kind)).cell(std::uint64_t{r.k}).cell(r.alpha).cell(std::uint64_t{r.mc_count})
            .cell(r.seed).cell(r.value);
        w.end_row();
    }
    return w.str();
}

std::string format_manifest(const Manifest& m) {
    std::string out;
    out += "version = " + m.version + "\n";
    out += "command = " + m.command + "\n";
    out += "seed = " + std::to_string(m.seed) + "\n";
    out += "started = " + m.started + "\n";
    out += "finished = " + m.finished + "\n";
    for (const auto& [k, v] : m.config) out += "config." + k + " = " + v + "\n";
    for (const auto& n : m.notes) out += "note = " + n + "\n";
    for (const auto& f : m.files) out += "file = " + f.sha256 + "  " + f.file + "\n";
    return out;
}

Manifest parse_manifest(std::string_view text) {
    Manifest m;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        const auto eq = line.find(" = ");
        if (eq == std::string_view::npos) throw ParseError("expected `key = value`", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 3)));
        if (key == "version") m.version = value;
        else if (key == "command") m.command = value;
        else if (key == "seed") m.seed = std::stoull(value);
        else if (key == "started") m.started = value;
        else if (key == "finished") m.finished = value;
        else if (key == "note") m.notes.push_back(value);
        else if (key.rfind("config.", 0) == 0) m.config.emplace_back(key.substr(7), value);
        else if (key == "file") {
            const auto sp = value.find("  ");
            if (sp == std::string::npos) throw ParseError("file entry must be `digest  name`", line_no);
            m.files.push_back({value.substr(sp + 2), value.substr(0, sp)});
        } else {
            throw ParseError("unknown manifest key '" + key + "'", line_no);
        }
    }
    return m;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace covx::io
