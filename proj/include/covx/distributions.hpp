#pragma once

// Entry laws for the simulated data matrices. Every family is standardized
// analytically to mean 0 and variance 1.

#include "covx/matrix.hpp"
#include "covx/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace covx::sim {

enum class Family { gaussian, rademacher, uniform_scaled, student_t, sym_pareto, laplace_scaled };

enum class MomentKind {
    C1,   // E|X|^s < inf for every s < index
    C2p,  // subexponential moment of |X_11 X_12|
    C3p,  // exponential moment of |X_11 X_12|
    RV    // regularly varying tails with tail index `index`
};

struct MomentClass {
    MomentKind kind = MomentKind::C1;
    double index = 0.0;  // moment bound for C1 / tail index for RV; +inf when all moments exist

    /// Whether E|X|^s is finite.
    bool has_moment(double s) const noexcept;
    std::string to_string() const;
};

struct DistributionSpec {
    Family family = Family::gaussian;
    double param = 0.0;  // nu for student_t, alpha for sym_pareto
    MomentClass moment_class;
    double var_x2 = 2.0;  // Var(X^2); +inf when E X^4 = inf

    static DistributionSpec gaussian();
    static DistributionSpec rademacher();
    static DistributionSpec uniform_scaled();
    static DistributionSpec student_t(double nu);
    static DistributionSpec sym_pareto(double alpha);
    static DistributionSpec laplace_scaled();

    /// Family by name ("gaussian", "student_t", ...); `param` is ignored for
    /// parameter-free families.
    static DistributionSpec from_name(const std::string& name, double param);

    std::string name() const;
    bool regularly_varying() const noexcept { return moment_class.kind == MomentKind::RV; }

    /// Quantile function of |X| at level u in [0, 1). Available in closed
    /// form for every family except gaussian and student_t (DomainError).
    double abs_quantile(double u) const;
};

/// Fills `out` with iid draws, consuming `stream` sequentially.
void fill(const DistributionSpec& spec, rng::RandomStream& stream, std::span<double> out);

/// iid p x n matrix from stream (seed, 0).
DataMatrix sample_matrix(const DistributionSpec& spec, std::size_t p, std::size_t n, std::uint64_t seed);
DataMatrix sample_matrix(const DistributionSpec& spec, std::size_t p, std::size_t n, rng::RandomStream& stream);

double sample_standard_normal(rng::RandomStream& stream);
double sample_exponential(rng::RandomStream& stream);
double sample_gumbel(rng::RandomStream& stream);

/// a_k with k P(|X| > a_k) = 1 for a regularly-varying spec, by inversion
/// of the |X| quantile at 1 - 1/k. Throws DomainError for specs without an
/// RV tag. k = 1 returns the essential infimum of |X|.
double a_quantile(const DistributionSpec& spec, double k);

/// Same level from a caller-supplied |X| quantile function.
double a_quantile(const std::function<double(double)>& abs_quantile, double k);

/// Solves k * survival(a) = 1 for a by bracketed bisection to `rel_tol`
/// relative width. `survival` must be non-increasing on [lo, hi] with
/// k * survival(lo) >= 1 >= k * survival(hi).
double solve_tail_level(const std::function<double(double)>& survival, double k, double lo, double hi,
                        double rel_tol = 1e-10);

}  // namespace covx::sim
