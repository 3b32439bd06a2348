#include "cascade/infer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cascade/kernels.hpp"
#include "cascade/parallel.hpp"
#include "cascade/rng.hpp"

namespace cascade {

std::vector<double> InferenceProblem::full(std::span<const double> x) const {
    if (x.size() != free.size()) throw ValidationError("parameter vector has the wrong dimension");
    std::vector<double> theta = base;
    for (std::size_t j = 0; j < free.size(); ++j) theta[free[j]] = x[j];
    return theta;
}

ConversionHazard InferenceProblem::hazard(std::span<const double> x) const {
    const auto theta = full(x);
    if (parameterization == Parameterization::michaelis_menten)
        return ConversionHazard::michaelis_menten(J, theta[0], theta[1]);
    return ConversionHazard::cascade(CascadeParams::from_theta(J, theta));
}

std::vector<std::string> InferenceProblem::names() const {
    std::vector<std::string> all;
    if (parameterization == Parameterization::michaelis_menten) {
        all = {"kappa_M", "kappa_P"};
    } else {
        for (int i = 1; i <= r; ++i) {
            all.push_back("kappa_" + std::to_string(i));
            all.push_back("kappa_-" + std::to_string(i));
        }
        all.push_back("kappa_P");
    }
    std::vector<std::string> out;
    for (auto j : free) out.push_back(all.at(j));
    return out;
}

bool InferenceProblem::in_bounds(std::span<const double> x) const {
    for (std::size_t j = 0; j < x.size(); ++j)
        if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
    return true;
}

void InferenceProblem::validate() const {
    if (data.K() == 0) throw ValidationError("inference needs at least one product-formation time (K >= 1)");
    validate_tau_sample(data);
    if (J < 1) throw ValidationError("conservation constant J must be >= 1");
    const std::size_t full_dim = parameterization == Parameterization::michaelis_menten
                                     ? 2
                                     : static_cast<std::size_t>(2 * r + 1);
    if (parameterization == Parameterization::michaelis_menten && r != 1)
        throw ValidationError("the (kappa_M, kappa_P) parameterization needs r = 1");
    if (base.size() != full_dim) throw ValidationError("base parameter vector has the wrong length");
    if (free.empty()) throw ValidationError("no parameters selected for fitting");
    if (lower.size() != free.size() || upper.size() != free.size())
        throw ValidationError("bounds must have one entry per fitted parameter");
    for (std::size_t j = 0; j < free.size(); ++j) {
        if (free[j] >= full_dim) throw ValidationError("fitted parameter index out of range");
        if (!(lower[j] > 0.0) || !(upper[j] > lower[j]) || !std::isfinite(upper[j]))
            throw ValidationError("bounds must satisfy 0 < lower < upper < inf");
    }
    for (double v : base)
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("base parameters must be finite and > 0");
}

InferenceProblem michaelis_menten_problem(TauSample data, int J, std::vector<double> lower,
                                          std::vector<double> upper) {
    InferenceProblem p;
    p.data = std::move(data);
    p.r = 1;
    p.J = J;
    p.parameterization = Parameterization::michaelis_menten;
    p.free = {0, 1};
    p.lower = std::move(lower);
    p.upper = std::move(upper);
    if (p.lower.size() != 2 || p.upper.size() != 2)
        throw ValidationError("bounds must have one entry per fitted parameter");
    p.base = {std::sqrt(p.lower.at(0) * p.upper.at(0)), std::sqrt(p.lower.at(1) * p.upper.at(1))};
    p.validate();
    return p;
}

InferenceProblem raw_problem(TauSample data, const CascadeParams& base, std::vector<std::size_t> free,
                             std::vector<double> lower, std::vector<double> upper) {
    InferenceProblem p;
    p.data = std::move(data);
    p.r = base.r();
    p.J = base.J();
    p.parameterization = Parameterization::raw;
    p.base = base.theta();
    p.free = std::move(free);
    p.lower = std::move(lower);
    p.upper = std::move(upper);
    p.validate();
    return p;
}

namespace {

// Per-particle hazard h(z)/z from the product flux, which has no cancellation
// at small z; the floor keeps it at its z -> 0 limit once exp(y) underflows.
double per_particle_rate(const ConversionHazard& hazard, double y) {
    const double z = std::max(std::exp(y), 1e-280);
    return hazard.product_flux(z) / z;
}

}  // namespace

double log_likelihood(const InferenceProblem& problem, std::span<const double> x) {
    if (problem.data.K() == 0) throw ValidationError("inference needs at least one product-formation time (K >= 1)");
    if (!problem.in_bounds(x)) return minus_infinity;
    const auto hazard = problem.hazard(x);
    const double T = problem.data.T;
    // y = log Z_S solves y' = -h(Z_S) / Z_S, y(0) = 0; in logs h(Z_S(t)) stays
    // representable when Z_S itself underflows.
    const auto sol = integrate_dopri5(
        [&hazard](double, std::span<const double> y, std::span<double> dy) { dy[0] = -per_particle_rate(hazard, y[0]); },
        0.0, {0.0}, T, problem.ode);
    const double mass = -std::expm1(sol.component(0, T));
    if (!(mass > 0.0)) return minus_infinity;
    double acc = 0.0;
    for (double t : problem.data.times) {
        const double y = sol.component(0, t);
        const double rate = per_particle_rate(hazard, y);
        if (!(rate > 0.0)) return minus_infinity;
        acc += std::log(rate) + y;
    }
    return acc - static_cast<double>(problem.data.K()) * std::log(mass);
}

namespace {

// log L with parameter-region and solver failures mapped to -inf so that
// optimisers and samplers can step away from them.
double guarded_loglik(const InferenceProblem& problem, std::span<const double> x) {
    try {
        return log_likelihood(problem, x);
    } catch (const NumericalError&) {
        return minus_infinity;
    }
}

std::vector<double> exp_of(std::span<const double> y) {
    std::vector<double> x(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) x[j] = std::exp(y[j]);
    return x;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             const NelderMeadOptions& opt) {
    const std::size_t d = x0.size();
    if (d == 0) throw ValidationError("Nelder-Mead needs at least one dimension");
    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    std::vector<std::vector<double>> simplex(d + 1, x0);
    for (std::size_t j = 0; j < d; ++j) simplex[j + 1][j] += opt.initial_step;
    std::vector<double> fv(d + 1);
    for (std::size_t i = 0; i <= d; ++i) fv[i] = eval(simplex[i]);

    std::vector<std::size_t> order(d + 1);
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
        const double spread = std::abs(fv[worst] - fv[best]);
        if (diameter <= opt.xtol && spread <= opt.ftol && std::isfinite(fv[best])) {
            res.converged = true;
            break;
        }
        if (diameter <= opt.xtol && !std::isfinite(fv[best])) break;  // collapsed inside an infeasible region

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[i][j] / static_cast<double>(d);
        }
        for (std::size_t j = 0; j < d; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            for (std::size_t j = 0; j < d; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        // Contraction, outside if the reflected point improved on the worst.
        const bool outside = fr < fv[worst];
        const auto& toward = outside ? xr : simplex[worst];
        for (std::size_t j = 0; j < d; ++j) xc[j] = centroid[j] + 0.5 * (toward[j] - centroid[j]);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[worst])) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < d; ++j)
                simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            fv[i] = eval(simplex[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = simplex[best];
    res.f = fv[best];
    return res;
}

MleResult fit_mle(const InferenceProblem& problem, const MleOptions& options, std::uint64_t seed) {
    problem.validate();
    if (options.starts == 0) throw ValidationError("at least one optimizer start is required");
    const std::size_t d = problem.dim();
    const std::size_t m = options.starts;

    // Latin hypercube in the log-bounds.
    auto eng = make_engine(seed);
    std::vector<std::vector<double>> starts(m, std::vector<double>(d));
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<std::size_t> strata(m);
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        for (std::size_t i = m - 1; i > 0; --i) std::swap(strata[i], strata[uniform_index(eng, i + 1)]);
        const double lo = std::log(problem.lower[j]), hi = std::log(problem.upper[j]);
        for (std::size_t i = 0; i < m; ++i)
            starts[i][j] = lo + (static_cast<double>(strata[i]) + uniform01(eng)) / static_cast<double>(m) * (hi - lo);
    }

    MleResult res;
    res.starts.resize(m);
    parallel_for(m, options.threads, [&](std::size_t i) {
        auto objective = [&](std::span<const double> y) { return -guarded_loglik(problem, exp_of(y)); };
        const auto nm = nelder_mead(objective, starts[i], options.nm);
        auto& s = res.starts[i];
        s.start = exp_of(starts[i]);
        s.x = exp_of(nm.x);
        s.loglik = -nm.f;
        s.iterations = nm.iterations;
        s.converged = nm.converged;
    });

    const MleStart* best = nullptr;
    for (const auto& s : res.starts)
        if (s.converged && std::isfinite(s.loglik) && (best == nullptr || s.loglik > best->loglik)) best = &s;
    if (best == nullptr) {
        std::ostringstream msg;
        msg << "no optimizer start converged:";
        for (std::size_t i = 0; i < m; ++i)
            msg << " [start " << i << ": loglik " << res.starts[i].loglik << " after "
                << res.starts[i].iterations << " iterations]";
        throw NumericalError(msg.str());
    }
    res.theta = best->x;
    res.loglik = best->loglik;
    return res;
}

double PriorSpec::log_density(std::span<const double> x) const {
    if (x.size() != lo.size() || x.size() != hi.size()) throw ValidationError("prior dimension mismatch");
    if (kind == Kind::independent_uniform) {
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (!(x[j] > lo[j] && x[j] < hi[j])) return minus_infinity;
            acc -= std::log(hi[j] - lo[j]);
        }
        return acc;
    }
    if (x.size() != 2) throw ValidationError("ordered Michaelis-Menten prior is two-dimensional");
    if (!(x[0] > lo[0] && x[0] < hi[0])) return minus_infinity;
    if (!(x[1] > x[0] && x[1] < hi[1])) return minus_infinity;
    return -std::log(hi[0] - lo[0]) - std::log(hi[1] - x[0]);
}

std::string PriorSpec::describe() const {
    std::ostringstream s;
    if (kind == Kind::ordered_mm) {
        s << "kappa_M ~ Uniform(" << lo[0] << ", " << hi[0] << "), kappa_P ~ Uniform(kappa_M, " << hi[1] << ")";
        return s.str();
    }
    for (std::size_t j = 0; j < lo.size(); ++j) s << (j ? ", " : "") << "x" << j + 1 << " ~ Uniform(" << lo[j] << ", " << hi[j] << ")";
    return s.str();
}

std::vector<double> Posterior::marginal(std::size_t j) const {
    std::vector<double> out;
    out.reserve(chain.size());
    for (const auto& x : chain) out.push_back(x.at(j));
    return out;
}

namespace {

// Lower Cholesky factor of a small SPD matrix (row-major d x d).
std::vector<double> cholesky(std::vector<double> a, std::size_t d) {
    for (std::size_t j = 0; j < d; ++j) {
        double s = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) s -= a[j * d + k] * a[j * d + k];
        if (!(s > 0.0)) throw NumericalError("proposal covariance is not positive definite");
        a[j * d + j] = std::sqrt(s);
        for (std::size_t i = j + 1; i < d; ++i) {
            double t = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) t -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = t / a[j * d + j];
        }
        for (std::size_t k = j + 1; k < d; ++k) a[j * d + k] = 0.0;
    }
    return a;
}

}  // namespace

Posterior random_walk_metropolis(const LogDensity& loglik, const PriorSpec& prior, std::vector<double> x0,
                                 const ChainOptions& opt, std::uint64_t seed) {
    const std::size_t d = x0.size();
    if (d == 0) throw ValidationError("empty parameter vector");
    if (opt.samples == 0) throw ValidationError("chain needs at least one kept sample");
    if (!(opt.initial_scale > 0.0)) throw ValidationError("proposal scale must be > 0");
    for (double v : x0)
        if (!(v > 0.0)) throw ValidationError("chain start must be positive");

    auto eng = make_engine(seed);
    NormalSource normal;

    // Target in y = log x: log L + log prior + sum y (Jacobian of exp).
    struct Point {
        std::vector<double> y;
        double loglik = minus_infinity;
        double logpost = minus_infinity;
    };
    auto evaluate = [&](std::vector<double> y) {
        Point p;
        p.y = std::move(y);
        const auto x = exp_of(p.y);
        const double lp = prior.log_density(x);
        if (!std::isfinite(lp)) return p;
        p.loglik = loglik(x);
        if (!std::isfinite(p.loglik)) return p;
        p.logpost = p.loglik + lp + std::accumulate(p.y.begin(), p.y.end(), 0.0);
        return p;
    };

    std::vector<double> y0(d);
    for (std::size_t j = 0; j < d; ++j) y0[j] = std::log(x0[j]);
    Point cur = evaluate(y0);
    if (!std::isfinite(cur.logpost)) throw ValidationError("chain start has zero posterior density");

    std::vector<double> chol(d * d, 0.0);
    for (std::size_t j = 0; j < d; ++j) chol[j * d + j] = 1.0;
    double log_scale = std::log(opt.initial_scale);
    const std::size_t phase = opt.burn_in / 2;
    std::vector<std::vector<double>> warm;

    Posterior post;
    std::size_t acc_burn = 0, acc_kept = 0;
    std::vector<double> z(d), prop(d);
    const std::size_t total = opt.burn_in + opt.samples;
    for (std::size_t it = 0; it < total; ++it) {
        const bool burning = it < opt.burn_in;
        if (burning && it == phase && warm.size() > 2 * d + 2) {
            // Switch to the burn-in covariance with the 2.38^2 / d scaling.
            std::vector<double> mean(d, 0.0), cov(d * d, 0.0);
            for (const auto& w : warm)
                for (std::size_t j = 0; j < d; ++j) mean[j] += w[j] / static_cast<double>(warm.size());
            for (const auto& w : warm)
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        cov[i * d + j] += (w[i] - mean[i]) * (w[j] - mean[j]) / static_cast<double>(warm.size() - 1);
            for (std::size_t j = 0; j < d; ++j) cov[j * d + j] += 1e-12;
            try {
                chol = cholesky(cov, d);
                log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
            } catch (const NumericalError&) {
                // Degenerate burn-in cloud: keep the isotropic proposal.
            }
        }
        const double scale = std::exp(log_scale);
        for (std::size_t j = 0; j < d; ++j) z[j] = normal(eng);
        for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j <= i; ++j) s += chol[i * d + j] * z[j];
            prop[i] = cur.y[i] + scale * s;
        }
        Point cand = evaluate(prop);
        const double log_alpha = cand.logpost - cur.logpost;
        const bool accept = std::isfinite(cand.logpost) && std::log(uniform_pos(eng)) < log_alpha;
        if (accept) cur = std::move(cand);
        if (burning) {
            acc_burn += accept;
            const double gain = 1.0 / std::sqrt(1.0 + static_cast<double>(it % std::max<std::size_t>(phase, 1)));
            log_scale += gain * ((accept ? 1.0 : 0.0) - opt.target_acceptance);
            if (it < phase) warm.push_back(cur.y);
        } else {
            acc_kept += accept;
            post.chain.push_back(exp_of(cur.y));
            post.log_posterior.push_back(cur.logpost);
            post.log_likelihood.push_back(cur.loglik);
        }
    }
    post.acceptance_rate = static_cast<double>(acc_kept) / static_cast<double>(opt.samples);
    post.burn_in_acceptance = opt.burn_in ? static_cast<double>(acc_burn) / static_cast<double>(opt.burn_in) : 0.0;
    post.proposal_scale = std::exp(log_scale);
    post.prior = prior.describe();
    if (acc_kept == 0)
        throw NumericalError("Metropolis chain accepted no proposals; try a different initial proposal scale");
    return post;
}

Posterior fit_bayes(const InferenceProblem& problem, const PriorSpec& prior, const ChainOptions& options,
                    std::uint64_t seed, unsigned threads) {
    problem.validate();
    if (prior.lo.size() != problem.dim() || prior.hi.size() != problem.dim())
        throw ValidationError("prior must have one entry per fitted parameter");
    for (std::size_t j = 0; j < problem.dim(); ++j)
        if (prior.lo[j] < 0.0 || prior.hi[j] > problem.upper[j])
            throw ValidationError("prior support must lie within the parameter bounds");

    MleOptions mle_opt;
    mle_opt.threads = threads;
    std::vector<double> x0 = fit_mle(problem, mle_opt, stream_seed(seed, 0)).theta;
    if (!std::isfinite(prior.log_density(x0))) {
        // The MLE lies outside the prior support: start from the middle of the support instead.
        for (std::size_t j = 0; j < x0.size(); ++j) x0[j] = 0.5 * (std::max(prior.lo[j], problem.lower[j]) + prior.hi[j]);
        if (prior.kind == PriorSpec::Kind::ordered_mm) x0[1] = 0.5 * (x0[0] + prior.hi[1]);
    }
    auto ll = [&problem](std::span<const double> x) { return guarded_loglik(problem, x); };
    auto post = random_walk_metropolis(ll, prior, x0, options, stream_seed(seed, 1));
    post.names = problem.names();
    return post;
}

double silverman_bandwidth(std::span<const double> values) {
    const std::size_t m = values.size();
    if (m < 2) throw ValidationError("KDE needs at least two values");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    if (!(sd > 0.0)) throw ValidationError("KDE input has zero variance");
    return 1.06 * sd * std::pow(static_cast<double>(m), -0.2);
}

std::vector<double> kde(std::span<const double> values, std::span<const double> grid, double bandwidth) {
    if (values.size() < 2) throw ValidationError("KDE needs at least two values");
    if (!(bandwidth > 0.0)) throw ValidationError("KDE bandwidth must be > 0");
    std::vector<double> out(grid.size());
    kernels::gaussian_sum(values, 1.0 / bandwidth, grid, out);
    const double norm = 1.0 / (static_cast<double>(values.size()) * bandwidth * std::sqrt(2.0 * M_PI));
    for (auto& v : out) v *= norm;
    return out;
}

std::vector<double> kde(std::span<const double> values, std::span<const double> grid) {
    return kde(values, grid, silverman_bandwidth(values));
}

std::vector<double> kde_grid(std::span<const double> values, std::size_t points) {
    if (points < 2) throw ValidationError("KDE grid needs at least two points");
    const double h = silverman_bandwidth(values);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double a = *lo - 4.0 * h, b = *hi + 4.0 * h;
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

KdeSummary kde_summary(std::span<const double> values, std::size_t points) {
    KdeSummary s;
    s.bandwidth = silverman_bandwidth(values);
    s.grid = kde_grid(values, points);
    s.density = kde(values, s.grid, s.bandwidth);
    const auto peak = std::max_element(s.density.begin(), s.density.end());
    s.mode = s.grid[static_cast<std::size_t>(peak - s.density.begin())];
    const double floor = 0.01 * *peak;
    for (std::size_t i = 0; i < s.density.size(); ++i) {
        const double left = i > 0 ? s.density[i - 1] : -1.0;
        const double right = i + 1 < s.density.size() ? s.density[i + 1] : -1.0;
        if (s.density[i] > left && s.density[i] >= right && s.density[i] >= floor) ++s.modes;
    }
    return s;
}

}  // namespace cascade
