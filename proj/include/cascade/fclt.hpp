#pragma once

// Gaussian fluctuations around the reduced model.
//
// U^(n) = sqrt(n) (Z_V^(n) - Z_V) converges to the linear SDE
//   dU = A(t) U dt + D(t)^{1/2} dW,
// where A is the Jacobian of the reduced vector field and D(t) is the
// pi-weighted sum of outer products of the corrected jump vectors
// (jump of V plus jump of the Poisson corrector F). The running integral of
// D is the limiting quadratic variation S_F.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cascade/linalg.hpp"
#include "cascade/model.hpp"
#include "cascade/ode.hpp"
#include "cascade/poisson.hpp"
#include "cascade/qssa.hpp"
#include "cascade/ssa.hpp"

namespace cascade {

/// Jacobian of (-h(z_S), kappa_P J p_r(z_S)) with respect to (z_S, z_P).
Mat2 drift_matrix(const CascadeParams& params, double z_S);

/// D(z_S) = sum_k v_k v_k^T lambda_k^avg(z_S) with the state-independent
/// corrected jump vectors of the linear corrector. Throws if `poisson` is uncertified.
Mat2 diffusion_rate(const CascadeParams& params, double z_S, const PoissonSolution& poisson);
Mat2 diffusion_rate(const CascadeParams& params, double z_S);

/// The same quantity by explicit summation over B^r_{J,+} with pi weights.
Mat2 diffusion_rate_enumerated(const CascadeParams& params, double z_S, const PoissonSolution& poisson);

/// Time-dependent coefficients of the limiting SDE on [0, T].
class FluctuationModel {
public:
    using MatrixFn = std::function<Mat2(double)>;

    FluctuationModel(MatrixFn drift, MatrixFn diffusion, double T);

    /// Coefficients along the reduced path of a cascade.
    static FluctuationModel from_cascade(const CascadeParams& params, const ReducedPath& path);

    Mat2 drift(double t) const { return drift_(t); }
    Mat2 diffusion(double t) const { return diffusion_(t); }
    double T() const { return T_; }

private:
    MatrixFn drift_;
    MatrixFn diffusion_;
    double T_;
};

/// Dense solution of dSigma/dt = A Sigma + Sigma A^T + D (components s11, s12, s22).
class CovariancePath {
public:
    explicit CovariancePath(DenseSolution sol) : sol_(std::move(sol)) {}
    Mat2 operator()(double t) const;
    double T() const { return sol_.t1(); }
    const DenseSolution& solution() const { return sol_; }

private:
    DenseSolution sol_;
};

CovariancePath solve_covariance(const FluctuationModel& model, const Mat2& sigma0, double T,
                                const OdeOptions& options = {});

struct FluctuationPath {
    std::vector<double> t;
    std::vector<double> u_s;
    std::vector<double> u_p;
};

/// Euler-Maruyama path; steps = 0 selects the default T / 4096.
FluctuationPath simulate_fluctuation(const FluctuationModel& model, double u_s0, double u_p0, double T,
                                     std::size_t steps, std::uint64_t seed);

struct FluctuationSample {
    std::vector<double> u_s;
    std::vector<double> u_p;

    std::size_t size() const { return u_s.size(); }
};

/// U(T) for `reps` independent Euler-Maruyama paths started at u0.
/// Replicates are processed in blocks of 256; block b draws its noise from
/// stream_seed(base_seed, b), so the result does not depend on `threads`.
FluctuationSample simulate_fluctuation_batch(const FluctuationModel& model, double u_s0, double u_p0,
                                             double T, std::size_t steps, std::size_t reps,
                                             std::uint64_t base_seed, unsigned threads);

/// sqrt(n) (Z^(n)(t_g) - Z(t_g)) for each replicate of an SSA batch, at grid
/// index g (default: last grid point). Throws if the batch does not start
/// from the reduced path's initial point or extends past its horizon.
FluctuationSample empirical_fluctuation(const GridBatch& batch, const ScalingRegime& regime,
                                        const ReducedPath& reduced, std::optional<std::size_t> g = {});

/// Sample mean and covariance with standard errors of the covariance entries.
struct SampleMoments {
    double mean_s = 0.0, mean_p = 0.0;
    double se_mean_s = 0.0, se_mean_p = 0.0;
    Mat2 cov;
    Mat2 se_cov;  // standard error of each covariance entry
};
SampleMoments sample_moments(const FluctuationSample& sample);

}  // namespace cascade
