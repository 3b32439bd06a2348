#pragma once

// Poisson equation for the frozen fast block.
//
// B_{z_S} F = -(lambda_bar_-1 - lambda_bar_1, lambda_bar_P), where the
// lambda_bar are the pi-centred slow propensities. Both right-hand sides are
// affine in z_C, so F is sought in the linear span F_k(z_C) = sum_i b^k_i z_i.
// Matching the z_i-coefficients of B F gives an r x r system; the solution is
// then certified by evaluating B F + h on every state of B^r_{J,+}.

#include <cstddef>
#include <span>
#include <vector>

#include "cascade/lattice.hpp"
#include "cascade/linalg.hpp"
#include "cascade/model.hpp"

namespace cascade {

/// Generator B_{z_S} of the complex block with the substrate frozen at z_S.
class FastGenerator {
public:
    struct Transition {
        std::size_t target;
        double rate;
    };

    FastGenerator(CascadeParams params, double z_S);

    const CascadeParams& params() const { return params_; }
    double z_S() const { return z_S_; }
    const Lattice& lattice() const { return lattice_; }

    /// Outgoing jumps from a lattice state (zero-rate moves omitted).
    std::vector<Transition> transitions(std::size_t state) const;

    /// (B f)(z_C) for f given by its values on the lattice.
    double apply(std::span<const double> f, std::span<const int> z_C) const;
    std::vector<double> apply_all(std::span<const double> f) const;

private:
    CascadeParams params_;
    double z_S_;
    Lattice lattice_;
};

/// (B f)(z_C). f must be defined (one value per lattice state) on the whole block.
double apply_generator(const FastGenerator& gen, std::span<const double> f, std::span<const int> z_C);

struct PoissonSolution {
    double z_S = 0.0;
    std::vector<double> b1;  // coefficients of F_1
    std::vector<double> b2;  // coefficients of F_2
    double residual_max = 0.0;
    double residual_tolerance = 0.0;
    bool certified = false;

    double F1(std::span<const int> z_C) const;
    double F2(std::span<const int> z_C) const;
};

/// Centred right-hand sides h = (lambda_bar_-1 - lambda_bar_1, lambda_bar_P) on the lattice.
struct PoissonRhs {
    std::vector<double> h1;
    std::vector<double> h2;
};
PoissonRhs poisson_rhs(const FastGenerator& gen);

/// Coefficient matrix K with (B f)'s z_i-coefficient = (K b)_i for f = sum b_i z_i.
DenseMatrix poisson_coefficient_matrix(const CascadeParams& params, double z_S);

/// Solve and certify. Throws NumericalError when the system is singular or the
/// certified residual exceeds 1e-8 * max(1, ||h||_inf).
PoissonSolution solve_poisson(const CascadeParams& params, double z_S);

}  // namespace cascade
