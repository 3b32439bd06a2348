#pragma once

// Reduced (sQSSA) model of the cascade.
//
// With the substrate frozen at z_S, the complex block is a closed linear
// network of J independent enzymes, so its stationary law is
// Multinomial(J, p_1(z_S), ..., p_r(z_S)). Averaging the slow propensities
// against that law gives the conversion rate h(y) of the reduced reaction
// S -> P and the ODE dZ_S/dt = -h(Z_S), dZ_P/dt = kappa_P J p_r(Z_S).

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "cascade/lattice.hpp"
#include "cascade/model.hpp"
#include "cascade/ode.hpp"

namespace cascade {

/// Recursion auxiliaries a_1(z_S), a_2..a_r and cell probabilities p_1..p_r.
struct StationaryWeights {
    double z_S = 0.0;
    std::vector<double> a;  // a[0] = a_1(z_S) (+inf at z_S = 0)
    std::vector<double> p;
};

/// Backward recursion for a_r, ..., a_2, then a_1(z_S) and p_i.
/// Throws NumericalError naming the index if some a_i <= 0.
StationaryWeights stationary_weights(const CascadeParams& params, double z_S);

/// Multinomial stationary pmf of the frozen fast block, indexed like `lattice`.
std::vector<double> stationary_pmf(const CascadeParams& params, double z_S, const Lattice& lattice);
std::vector<double> stationary_pmf(const CascadeParams& params, double z_S);

/// pi-averages of the scaled propensities.
struct AveragedPropensities {
    double binding = 0.0;    // lambda_1^avg  = kappa_1 J z_S (1 - sum p)
    double unbinding = 0.0;  // lambda_-1^avg = kappa_-1 J p_1
    double product = 0.0;    // lambda_P^avg  = kappa_P J p_r
    std::vector<double> forward;   // lambda_i^avg,  i = 1..r (forward[0] == binding)
    std::vector<double> backward;  // lambda_-i^avg, i = 1..r (backward[0] == unbinding)
};

/// Closed forms for the cell probabilities and their z_S-derivatives.
///
/// a_2..a_r do not depend on z_S, so p_1(z) = z / ((1 + c0) z + A1) and
/// p_i = q_i p_1 with q_i = prod_{j=2..i} 1/a_j. This form is continuous at
/// z = 0 where p = 0, and gives the derivatives analytically.
class FastBlockLaw {
public:
    explicit FastBlockLaw(const CascadeParams& params);

    const CascadeParams& params() const { return params_; }

    double p1(double z) const;
    double dp1(double z) const;
    /// Cell probability p_i, 1-based.
    double p(int i, double z) const { return q_[static_cast<std::size_t>(i - 1)] * p1(z); }
    double dp(int i, double z) const { return q_[static_cast<std::size_t>(i - 1)] * dp1(z); }
    double sum_p(double z) const { return q_sum_ * p1(z); }
    double sum_dp(double z) const { return q_sum_ * dp1(z); }
    std::vector<double> cell_probabilities(double z) const;

    AveragedPropensities averaged(double z) const;

    /// h(y) = kappa_1 J (1 - sum p(y)) y - kappa_-1 J p_1(y).
    double h(double y) const;
    /// dh/dy.
    double dh(double y) const;
    /// kappa_P J p_r(y), equal to h(y) by flux balance.
    double product_flux(double y) const;

    double c0() const { return q_sum_ - 1.0; }
    double A1() const { return A1_; }

private:
    CascadeParams params_;
    std::vector<double> q_;  // q_1 = 1, q_i = prod_{j=2..i} 1/a_j
    double q_sum_ = 1.0;
    double A1_ = 0.0;
};

AveragedPropensities averaged_propensities(const CascadeParams& params, double z_S);

/// h(y); y >= 0.
double h_theta(const CascadeParams& params, double y);
/// h(y)/y for y > 0, 0 at y = 0.
double g_theta(const CascadeParams& params, double y);

/// The conversion hazard y -> h(y) of the reduced model, either from a full
/// cascade or directly in the one-stage Michaelis-Menten form
/// h(y) = J kappa_P y / (kappa_M + y).
class ConversionHazard {
public:
    struct MichaelisMenten {
        double kappa_M;
        double kappa_P;
        int J;
    };

    static ConversionHazard cascade(const CascadeParams& params);
    static ConversionHazard michaelis_menten(int J, double kappa_M, double kappa_P);

    double h(double y) const;
    double g(double y) const;
    /// Rate of product formation; equals h except for rounding.
    double product_flux(double y) const;

    const CascadeParams* cascade_params() const;

private:
    explicit ConversionHazard(std::variant<FastBlockLaw, MichaelisMenten> model)
        : model_(std::move(model)) {}
    std::variant<FastBlockLaw, MichaelisMenten> model_;
};

/// Dense-output solution (Z_S, Z_P) of the reduced ODE on [0, T].
class ReducedPath {
public:
    ReducedPath(DenseSolution solution, double T);

    double T() const { return T_; }
    double z_s(double t) const { return sol_.component(0, t); }
    double z_p(double t) const { return sol_.component(1, t); }
    double z_s0() const { return sol_.node_value(0, 0); }
    double z_p0() const { return sol_.node_value(1, 0); }
    const DenseSolution& solution() const { return sol_; }

    /// Earliest t in [0, T] with Z_S(t) = level, or nullopt if Z_S(T) > level.
    /// Requires level in [Z_S(T), Z_S(0)].
    std::optional<double> time_at_level(double level) const;

private:
    DenseSolution sol_;
    double T_;
};

/// Default tolerances of the reduced solver.
OdeOptions reduced_ode_defaults();

/// dZ_S/dt = -h(Z_S), dZ_P/dt = product_flux(Z_S) from (z_S0, z_P0) on [0, T].
ReducedPath solve_reduced_ode(const ConversionHazard& hazard, double z_S0, double z_P0, double T,
                              const OdeOptions& options = reduced_ode_defaults());
ReducedPath solve_reduced_ode(const CascadeParams& params, double z_S0, double z_P0, double T,
                              const OdeOptions& options = reduced_ode_defaults());

/// mu([0, t]) = 1 - Z_S(t) for a path started at Z_S(0) = 1.
double tau_distribution(const ReducedPath& path, double t);

}  // namespace cascade
