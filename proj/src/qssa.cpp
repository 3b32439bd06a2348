#include "cascade/qssa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cascade {

namespace {

void require_nonnegative(double z_S) {
    if (!(z_S >= 0.0) || !std::isfinite(z_S))
        throw ValidationError("substrate level z_S must be finite and >= 0");
}

// a_2..a_r from the backward recursion; out[i - 1] = a_i, out[0] unused.
std::vector<double> recursion_tail(const CascadeParams& p) {
    const int r = p.r();
    std::vector<double> a(static_cast<std::size_t>(r), 0.0);
    if (r == 1) return a;
    auto at = [&](int i) -> double& { return a[static_cast<std::size_t>(i - 1)]; };
    at(r) = (p.backward(r) + p.product()) / p.forward(r);
    for (int i = r - 1; i >= 2; --i)
        at(i) = (p.backward(i) + p.forward(i + 1)) / p.forward(i) -
                p.backward(i + 1) / (at(i + 1) * p.forward(i));
    for (int i = r; i >= 2; --i) {
        if (!(at(i) > 0.0)) {
            std::ostringstream msg;
            msg << "stationary recursion produced a_" << i << " = " << at(i)
                << " <= 0; parameters are outside the multinomial form's validity";
            throw NumericalError(msg.str());
        }
    }
    return a;
}

}  // namespace

StationaryWeights stationary_weights(const CascadeParams& params, double z_S) {
    require_nonnegative(z_S);
    const int r = params.r();
    StationaryWeights w;
    w.z_S = z_S;
    w.a = recursion_tail(params);
    w.p.assign(static_cast<std::size_t>(r), 0.0);

    // prod_{i=2..r} 1/a_i and the partial products used by p_i.
    std::vector<double> inv_prod(static_cast<std::size_t>(r), 1.0);
    for (int i = 2; i <= r; ++i)
        inv_prod[static_cast<std::size_t>(i - 1)] =
            inv_prod[static_cast<std::size_t>(i - 2)] / w.a[static_cast<std::size_t>(i - 1)];

    if (z_S == 0.0) {
        w.a[0] = std::numeric_limits<double>::infinity();
        return w;
    }
    const double k1z = params.forward(1) * z_S;
    w.a[0] = params.backward(1) / k1z + params.product() / k1z * inv_prod.back();
    if (!(w.a[0] > 0.0)) throw NumericalError("stationary recursion produced a_1 <= 0");

    double denom = 1.0 + w.a[0];
    for (int i = 2; i <= r; ++i) denom += inv_prod[static_cast<std::size_t>(i - 1)];
    const double p1 = 1.0 / denom;
    for (int i = 1; i <= r; ++i)
        w.p[static_cast<std::size_t>(i - 1)] = p1 * inv_prod[static_cast<std::size_t>(i - 1)];
    return w;
}

std::vector<double> stationary_pmf(const CascadeParams& params, double z_S, const Lattice& lattice) {
    if (lattice.r() != params.r() || lattice.J() != params.J())
        throw ValidationError("lattice does not match the cascade's (r, J)");
    const auto w = stationary_weights(params, z_S);
    double rest = 1.0;
    for (double p : w.p) rest -= p;
    rest = std::max(rest, 0.0);

    const int J = params.J();
    const double log_j_fact = std::lgamma(J + 1.0);
    std::vector<double> pmf(lattice.size());
    for (std::size_t s = 0; s < lattice.size(); ++s) {
        const auto u = lattice.state(s);
        int bound = 0;
        double log_coef = log_j_fact;
        double mass = 1.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            bound += u[i];
            log_coef -= std::lgamma(u[i] + 1.0);
            mass *= std::pow(w.p[i], u[i]);
        }
        log_coef -= std::lgamma(J - bound + 1.0);
        mass *= std::pow(rest, J - bound);
        pmf[s] = mass == 0.0 ? 0.0 : std::exp(log_coef) * mass;
    }
    return pmf;
}

std::vector<double> stationary_pmf(const CascadeParams& params, double z_S) {
    return stationary_pmf(params, z_S, Lattice(params.r(), params.J()));
}

FastBlockLaw::FastBlockLaw(const CascadeParams& params) : params_(params) {
    const auto a = recursion_tail(params);
    const int r = params.r();
    q_.assign(static_cast<std::size_t>(r), 1.0);
    for (int i = 2; i <= r; ++i)
        q_[static_cast<std::size_t>(i - 1)] =
            q_[static_cast<std::size_t>(i - 2)] / a[static_cast<std::size_t>(i - 1)];
    q_sum_ = 0.0;
    for (double q : q_) q_sum_ += q;
    A1_ = (params.backward(1) + params.product() * q_.back()) / params.forward(1);
}

double FastBlockLaw::p1(double z) const { return z / (q_sum_ * z + A1_); }

double FastBlockLaw::dp1(double z) const {
    const double d = q_sum_ * z + A1_;
    return A1_ / (d * d);
}

std::vector<double> FastBlockLaw::cell_probabilities(double z) const {
    const double base = p1(z);
    std::vector<double> p(q_.size());
    for (std::size_t i = 0; i < q_.size(); ++i) p[i] = q_[i] * base;
    return p;
}

AveragedPropensities FastBlockLaw::averaged(double z) const {
    const int r = params_.r();
    const double J = params_.J();
    const auto p = cell_probabilities(z);
    AveragedPropensities avg;
    avg.forward.resize(static_cast<std::size_t>(r));
    avg.backward.resize(static_cast<std::size_t>(r));
    avg.forward[0] = params_.forward(1) * J * z * (1.0 - sum_p(z));
    for (int i = 2; i <= r; ++i)
        avg.forward[static_cast<std::size_t>(i - 1)] = params_.forward(i) * J * p[static_cast<std::size_t>(i - 2)];
    for (int i = 1; i <= r; ++i)
        avg.backward[static_cast<std::size_t>(i - 1)] = params_.backward(i) * J * p[static_cast<std::size_t>(i - 1)];
    avg.binding = avg.forward[0];
    avg.unbinding = avg.backward[0];
    avg.product = params_.product() * J * p.back();
    return avg;
}

double FastBlockLaw::h(double y) const {
    const double J = params_.J();
    const double p = p1(y);
    return params_.forward(1) * J * (1.0 - q_sum_ * p) * y - params_.backward(1) * J * p;
}

double FastBlockLaw::dh(double y) const {
    const double J = params_.J();
    const double p = p1(y);
    const double dp = dp1(y);
    return params_.forward(1) * J * (1.0 - q_sum_ * p) - params_.forward(1) * J * y * q_sum_ * dp -
           params_.backward(1) * J * dp;
}

double FastBlockLaw::product_flux(double y) const {
    return params_.product() * params_.J() * q_.back() * p1(y);
}

AveragedPropensities averaged_propensities(const CascadeParams& params, double z_S) {
    require_nonnegative(z_S);
    return FastBlockLaw(params).averaged(z_S);
}

double h_theta(const CascadeParams& params, double y) {
    require_nonnegative(y);
    return FastBlockLaw(params).h(y);
}

double g_theta(const CascadeParams& params, double y) {
    require_nonnegative(y);
    if (y == 0.0) return 0.0;
    return FastBlockLaw(params).h(y) / y;
}

ConversionHazard ConversionHazard::cascade(const CascadeParams& params) {
    return ConversionHazard(FastBlockLaw(params));
}

ConversionHazard ConversionHazard::michaelis_menten(int J, double kappa_M, double kappa_P) {
    if (J < 1) throw ValidationError("conservation constant J must be >= 1");
    if (!(kappa_M > 0.0) || !(kappa_P > 0.0) || !std::isfinite(kappa_M) || !std::isfinite(kappa_P))
        throw ValidationError("kappa_M and kappa_P must be finite and > 0");
    return ConversionHazard(MichaelisMenten{kappa_M, kappa_P, J});
}

double ConversionHazard::h(double y) const {
    if (const auto* law = std::get_if<FastBlockLaw>(&model_)) return law->h(y);
    const auto& mm = std::get<MichaelisMenten>(model_);
    return mm.J * mm.kappa_P * y / (mm.kappa_M + y);
}

double ConversionHazard::g(double y) const {
    if (y == 0.0) return 0.0;
    if (const auto* mm = std::get_if<MichaelisMenten>(&model_))
        return mm->J * mm->kappa_P / (mm->kappa_M + y);
    return h(y) / y;
}

double ConversionHazard::product_flux(double y) const {
    if (const auto* law = std::get_if<FastBlockLaw>(&model_)) return law->product_flux(y);
    return h(y);
}

const CascadeParams* ConversionHazard::cascade_params() const {
    if (const auto* law = std::get_if<FastBlockLaw>(&model_)) return &law->params();
    return nullptr;
}

ReducedPath::ReducedPath(DenseSolution solution, double T) : sol_(std::move(solution)), T_(T) {
    if (sol_.dim() != 2) throw ValidationError("reduced path needs a 2-component solution");
}

std::optional<double> ReducedPath::time_at_level(double level) const {
    const double start = z_s0();
    if (level >= start) return 0.0;
    const std::size_t steps = sol_.steps();
    if (level < sol_.node_value(0, steps)) return std::nullopt;

    // First node at or below the level; the crossing lies in the step before it.
    std::size_t lo = 0, hi = steps;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (sol_.node_value(0, mid) <= level)
            hi = mid;
        else
            lo = mid;
    }
    const std::size_t k = lo;
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
        const double m = 0.5 * (a + b);
        if (sol_.component_on_step(0, k, m) <= level)
            b = m;
        else
            a = m;
    }
    const auto& times = sol_.times();
    return times[k] + b * (times[k + 1] - times[k]);
}

OdeOptions reduced_ode_defaults() {
    OdeOptions opt;
    opt.atol = 1e-10;
    opt.rtol = 1e-8;
    return opt;
}

ReducedPath solve_reduced_ode(const ConversionHazard& hazard, double z_S0, double z_P0, double T,
                              const OdeOptions& options) {
    if (!(z_S0 >= 0.0) || !(z_P0 >= 0.0)) throw ValidationError("initial (z_S, z_P) must be >= 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("horizon T must be finite and > 0");
    auto rhs = [&hazard](double, std::span<const double> y, std::span<double> dy) {
        const double zs = y[0];
        dy[0] = -hazard.h(zs);
        dy[1] = hazard.product_flux(zs);
    };
    return ReducedPath(integrate_dopri5(rhs, 0.0, {z_S0, z_P0}, T, options), T);
}

ReducedPath solve_reduced_ode(const CascadeParams& params, double z_S0, double z_P0, double T,
                              const OdeOptions& options) {
    return solve_reduced_ode(ConversionHazard::cascade(params), z_S0, z_P0, T, options);
}

double tau_distribution(const ReducedPath& path, double t) {
    if (std::abs(path.z_s0() - 1.0) > 1e-12)
        throw ValidationError("product-time law needs a reduced path started at Z_S(0) = 1");
    if (!(t >= 0.0) || t > path.T()) throw ValidationError("t must lie in [0, T]");
    return 1.0 - path.z_s(t);
}

}  // namespace cascade
