#pragma once

// Dormand-Prince 5(4) integrator with the classical 4th-order continuous
// extension, keeping every accepted step so the solution can be evaluated
// anywhere on [t0, t1] after the fact.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cascade {

struct OdeOptions {
    double atol = 1e-10;
    double rtol = 1e-8;
    double initial_step = 0.0;  // 0: automatic
    std::size_t max_steps = 1'000'000;
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

class DenseSolution {
public:
    std::size_t dim() const { return dim_; }
    double t0() const { return times_.front(); }
    double t1() const { return times_.back(); }
    std::size_t steps() const { return times_.size() - 1; }
    /// Step boundaries, t0 = times()[0] < ... < times()[steps()] = t1.
    const std::vector<double>& times() const { return times_; }

    /// Value at t in [t0, t1] (clamped to the end points within 1e-12 relative).
    std::vector<double> operator()(double t) const;
    double component(std::size_t i, double t) const;
    /// Component i on step k, at normalised position theta in [0, 1].
    double component_on_step(std::size_t i, std::size_t k, double theta) const;
    /// Index of the step containing t.
    std::size_t step_of(double t) const;
    /// Value of component i at the start of step k (k = steps() gives the end value).
    double node_value(std::size_t i, std::size_t k) const;

private:
    friend DenseSolution integrate_dopri5(const OdeRhs&, double, std::vector<double>, double,
                                          const OdeOptions&);
    std::size_t dim_ = 0;
    std::vector<double> times_;
    std::vector<double> coeffs_;  // per step: 5 * dim interpolation coefficients
    std::vector<double> final_;
};

/// Integrate y' = f(t, y) from t0 to t1 > t0. Throws NumericalError if the
/// step size underflows, the step budget is exhausted or the state turns non-finite.
DenseSolution integrate_dopri5(const OdeRhs& f, double t0, std::vector<double> y0, double t1,
                               const OdeOptions& options = {});

}  // namespace cascade
