#include "cascade/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cascade/model.hpp"

namespace cascade {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
// Error coefficients (5th minus 4th order weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

DenseSolution integrate_dopri5(const OdeRhs& f, double t0, std::vector<double> y0, double t1,
                               const OdeOptions& opt) {
    if (!(t1 > t0)) throw ValidationError("ODE horizon must satisfy t1 > t0");
    const std::size_t n = y0.size();
    DenseSolution sol;
    sol.dim_ = n;
    sol.times_.push_back(t0);

    std::vector<double> y = std::move(y0), ynew(n), ytmp(n);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    f(t0, y, k1);

    auto error_norm_scale = [&](std::size_t, double a, double b) {
        return opt.atol + opt.rtol * std::max(std::abs(a), std::abs(b));
    };

    double h = opt.initial_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic.
        double d0 = 0.0, dd1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = error_norm_scale(i, y[i], y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            dd1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / static_cast<double>(std::max<std::size_t>(n, 1)));
        dd1 = std::sqrt(dd1 / static_cast<double>(std::max<std::size_t>(n, 1)));
        h = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
        h = std::min(h, t1 - t0);
    }

    double t = t0;
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t0), std::abs(t1));
    std::size_t steps = 0;
    bool last_rejected = false;
    while (t < t1) {
        if (++steps > opt.max_steps) {
            std::ostringstream msg;
            msg << "ODE step budget exhausted at t = " << t;
            throw NumericalError(msg.str());
        }
        bool final_step = false;
        if (t + h >= t1 || t + 1.01 * h >= t1) {
            h = t1 - t;
            final_step = true;
        }
        if (h <= h_min) {
            std::ostringstream msg;
            msg << "ODE step size underflow at t = " << t << " (h = " << h << ")";
            throw NumericalError(msg.str());
        }

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double t_next = final_step ? t1 : t + h;
        f(t_next, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(t_next, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                   e7 * k7[i]);
            const double sc = error_norm_scale(i, y[i], ynew[i]);
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / static_cast<double>(std::max<std::size_t>(n, 1)));
        if (!std::isfinite(err)) {
            std::ostringstream msg;
            msg << "ODE right-hand side produced a non-finite value near t = " << t;
            throw NumericalError(msg.str());
        }

        if (err <= 1.0) {
            const std::size_t base = sol.coeffs_.size();
            sol.coeffs_.resize(base + 5 * n);
            for (std::size_t i = 0; i < n; ++i) {
                const double diff = ynew[i] - y[i];
                const double bspl = h * k1[i] - diff;
                double* c = sol.coeffs_.data() + base + 5 * i;
                c[0] = y[i];
                c[1] = diff;
                c[2] = bspl;
                c[3] = diff - h * k7[i] - bspl;
                c[4] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                            d7 * k7[i]);
            }
            t = t_next;
            sol.times_.push_back(t);
            y.swap(ynew);
            k1.swap(k7);
            double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (last_rejected) fac = std::min(fac, 1.0);
            h *= fac;
            last_rejected = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            last_rejected = true;
        }
    }
    sol.final_ = y;
    return sol;
}

std::size_t DenseSolution::step_of(double t) const {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0;
    const auto k = static_cast<std::size_t>(it - times_.begin()) - 1;
    return std::min(k, steps() - 1);
}

double DenseSolution::component_on_step(std::size_t i, std::size_t k, double theta) const {
    const double* c = coeffs_.data() + k * 5 * dim_ + 5 * i;
    const double s1 = 1.0 - theta;
    return c[0] + theta * (c[1] + s1 * (c[2] + theta * (c[3] + s1 * c[4])));
}

double DenseSolution::node_value(std::size_t i, std::size_t k) const {
    if (k >= steps()) return final_[i];
    return coeffs_[k * 5 * dim_ + 5 * i];
}

double DenseSolution::component(std::size_t i, double t) const {
    const double span = t1() - t0();
    if (t < t0() - 1e-12 * span || t > t1() + 1e-12 * span)
        throw ValidationError("dense output evaluated outside the solved interval");
    if (t >= t1()) return final_[i];
    if (t <= t0()) return coeffs_[5 * i];
    const std::size_t k = step_of(t);
    const double h = times_[k + 1] - times_[k];
    return component_on_step(i, k, (t - times_[k]) / h);
}

std::vector<double> DenseSolution::operator()(double t) const {
    std::vector<double> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = component(i, t);
    return out;
}

}  // namespace cascade
