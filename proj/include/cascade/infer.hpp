#pragma once

// Likelihood-based inference from product-formation times.
//
// For K observed times t_i in (0, T] the limiting likelihood is
//   L(theta) = (1 - Z_S(T))^{-K} prod_i h(Z_S(t_i)),
// with Z_S the reduced solution started at 1.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cascade/ips.hpp"
#include "cascade/ode.hpp"
#include "cascade/qssa.hpp"

namespace cascade {

enum class Parameterization {
    raw,                // (kappa_1, kappa_-1, ..., kappa_r, kappa_-r, kappa_P)
    michaelis_menten,   // (kappa_M, kappa_P), r = 1 only
};

/// A dataset plus the parameters being fitted. Coordinates not listed in
/// `free` stay at their value in `base`.
struct InferenceProblem {
    TauSample data;
    int r = 1;
    int J = 1;
    Parameterization parameterization = Parameterization::michaelis_menten;
    std::vector<double> base;
    std::vector<std::size_t> free;
    std::vector<double> lower;  // per free coordinate
    std::vector<double> upper;
    OdeOptions ode = reduced_ode_defaults();

    std::size_t dim() const { return free.size(); }
    /// Full parameter vector with the free coordinates replaced by x.
    std::vector<double> full(std::span<const double> x) const;
    ConversionHazard hazard(std::span<const double> x) const;
    std::vector<std::string> names() const;
    bool in_bounds(std::span<const double> x) const;
    /// Throws ValidationError describing the first violated invariant.
    void validate() const;
};

/// (kappa_M, kappa_P) problem with both coordinates free.
InferenceProblem michaelis_menten_problem(TauSample data, int J, std::vector<double> lower,
                                          std::vector<double> upper);

/// Raw-rate problem for a cascade; `free` indexes CascadeParams::theta().
InferenceProblem raw_problem(TauSample data, const CascadeParams& base, std::vector<std::size_t> free,
                             std::vector<double> lower, std::vector<double> upper);

inline constexpr double minus_infinity = -std::numeric_limits<double>::infinity();

/// log L at the free coordinates x, with the reduced path integrated as log Z_S.
/// Out-of-bounds points, nonpositive hazards and 1 - Z_S(T) <= 0 give -infinity. Throws on empty data or ODE failure.
double log_likelihood(const InferenceProblem& problem, std::span<const double> x);

struct NelderMeadOptions {
    double xtol = 1e-10;
    double ftol = 1e-10;
    std::size_t max_iterations = 2000;
    double initial_step = 0.1;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Minimise f from x0 with the standard reflection/expansion/contraction/shrink moves.
/// Stops when the simplex diameter is below xtol and the spread of f below ftol.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options = {});

struct MleOptions {
    std::size_t starts = 8;
    NelderMeadOptions nm;
    unsigned threads = 1;
};

struct MleStart {
    std::vector<double> start;
    std::vector<double> x;
    double loglik = minus_infinity;
    std::size_t iterations = 0;
    bool converged = false;
};

struct MleResult {
    std::vector<double> theta;  // free coordinates
    double loglik = minus_infinity;
    std::vector<MleStart> starts;
};

/// Multi-start Nelder-Mead over log-parameters, starts Latin-hypercube in the
/// log-bounds. Throws NumericalError if no start converges.
MleResult fit_mle(const InferenceProblem& problem, const MleOptions& options, std::uint64_t seed);

/// Prior on the free coordinates.
struct PriorSpec {
    enum class Kind {
        independent_uniform,  // x_i ~ Uniform(lo_i, hi_i)
        ordered_mm,           // kappa_M ~ U(lo_0, hi_0), kappa_P | kappa_M ~ U(kappa_M, hi_1)
    };
    Kind kind = Kind::independent_uniform;
    std::vector<double> lo;
    std::vector<double> hi;

    double log_density(std::span<const double> x) const;
    std::string describe() const;
};

struct ChainOptions {
    std::size_t burn_in = 1000;
    std::size_t samples = 5000;
    double target_acceptance = 0.3;
    double initial_scale = 0.1;  // proposal sd in log-parameter units
};

struct Posterior {
    std::vector<std::string> names;
    std::vector<std::vector<double>> chain;  // kept points, natural scale
    std::vector<double> log_posterior;
    std::vector<double> log_likelihood;
    double acceptance_rate = 0.0;  // over kept iterations
    double burn_in_acceptance = 0.0;
    double proposal_scale = 0.0;
    std::string prior;

    std::vector<double> marginal(std::size_t j) const;
};

using LogDensity = std::function<double(std::span<const double>)>;

/// Random-walk Metropolis in log space on an arbitrary log-likelihood. The
/// proposal scale is adapted during burn-in (Robbins-Monro on the acceptance
/// rate, then the empirical burn-in covariance) and frozen afterwards.
Posterior random_walk_metropolis(const LogDensity& loglik, const PriorSpec& prior, std::vector<double> x0,
                                 const ChainOptions& options, std::uint64_t seed);

/// Posterior for an inference problem; the chain starts at the MLE.
Posterior fit_bayes(const InferenceProblem& problem, const PriorSpec& prior, const ChainOptions& options,
                    std::uint64_t seed, unsigned threads = 1);

/// Gaussian-kernel density estimate with Silverman's bandwidth 1.06 sd m^{-1/5}.
double silverman_bandwidth(std::span<const double> values);
std::vector<double> kde(std::span<const double> values, std::span<const double> grid);
std::vector<double> kde(std::span<const double> values, std::span<const double> grid, double bandwidth);

/// Equally spaced grid covering the sample +- 4 bandwidths.
std::vector<double> kde_grid(std::span<const double> values, std::size_t points = 512);

struct KdeSummary {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    double mode = 0.0;
    /// Local maxima of the density that reach at least 1% of its peak.
    std::size_t modes = 0;
};
KdeSummary kde_summary(std::span<const double> values, std::size_t points = 512);

}  // namespace cascade
