#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace covx {

// Argument outside the mathematical domain of an operation (p too small,
// alpha outside (0,1), malformed index tuple, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input text that does not follow the documented file formats.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A request refused before any allocation (memory budget, etc.).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative method that did not reach its tolerance. Carries the last
// estimate and iterate so callers can inspect or reuse them.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double last_estimate, std::vector<double> last_iterate)
        : std::runtime_error(what), last_estimate_(last_estimate), last_iterate_(std::move(last_iterate)) {}

    double last_estimate() const noexcept { return last_estimate_; }
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    double last_estimate_;
    std::vector<double> last_iterate_;
};

}  // namespace covx
