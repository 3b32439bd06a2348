#include "cascade/fclt.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/kernels.hpp"
#include "cascade/parallel.hpp"
#include "cascade/rng.hpp"

namespace cascade {

Mat2 drift_matrix(const CascadeParams& params, double z_S) {
    if (!(z_S >= 0.0)) throw ValidationError("z_S must be >= 0");
    const FastBlockLaw law(params);
    const double J = params.J();
    const double k1 = params.forward(1);
    Mat2 a;
    a.a11 = params.backward(1) * J * law.dp1(z_S) - k1 * J * (1.0 - law.sum_p(z_S)) +
            k1 * J * z_S * law.sum_dp(z_S);
    a.a21 = params.product() * J * law.dp(params.r(), z_S);
    return a;
}

namespace {

// Corrected jump vectors in reaction-index order 1, -1, 2, -2, ..., P.
std::vector<std::pair<double, double>> jump_vectors(const CascadeParams& params, const PoissonSolution& F) {
    const int r = params.r();
    std::vector<std::pair<double, double>> v(Reaction::count(r));
    v[0] = {F.b1[0] - 1.0, F.b2[0]};
    v[1] = {-v[0].first, -v[0].second};
    for (int i = 2; i <= r; ++i) {
        const auto a = static_cast<std::size_t>(i - 1);
        const std::pair<double, double> d{F.b1[a] - F.b1[a - 1], F.b2[a] - F.b2[a - 1]};
        v[2 * a] = d;
        v[2 * a + 1] = {-d.first, -d.second};
    }
    const auto last = static_cast<std::size_t>(r - 1);
    v.back() = {-F.b1[last], 1.0 - F.b2[last]};
    return v;
}

void require_certified(const PoissonSolution& F, const CascadeParams& params, double z_S) {
    if (!F.certified) throw ValidationError("diffusion rate needs a residual-certified Poisson solution");
    if (F.b1.size() != static_cast<std::size_t>(params.r()) || F.z_S != z_S)
        throw ValidationError("Poisson solution was computed for a different cascade or z_S");
}

}  // namespace

Mat2 diffusion_rate(const CascadeParams& params, double z_S, const PoissonSolution& poisson) {
    require_certified(poisson, params, z_S);
    const auto avg = averaged_propensities(params, z_S);
    const auto v = jump_vectors(params, poisson);
    std::vector<double> rate(v.size());
    for (int i = 1; i <= params.r(); ++i) {
        rate[static_cast<std::size_t>(2 * (i - 1))] = avg.forward[static_cast<std::size_t>(i - 1)];
        rate[static_cast<std::size_t>(2 * (i - 1) + 1)] = avg.backward[static_cast<std::size_t>(i - 1)];
    }
    rate.back() = avg.product;
    Mat2 d;
    for (std::size_t k = 0; k < v.size(); ++k) {
        d.a11 += v[k].first * v[k].first * rate[k];
        d.a12 += v[k].first * v[k].second * rate[k];
        d.a22 += v[k].second * v[k].second * rate[k];
    }
    d.a21 = d.a12;
    return d;
}

Mat2 diffusion_rate(const CascadeParams& params, double z_S) {
    return diffusion_rate(params, z_S, solve_poisson(params, z_S));
}

Mat2 diffusion_rate_enumerated(const CascadeParams& params, double z_S, const PoissonSolution& poisson) {
    require_certified(poisson, params, z_S);
    const Lattice lattice(params.r(), params.J());
    const auto pi = stationary_pmf(params, z_S, lattice);
    const int r = params.r();
    Mat2 d;
    ScaledState z;
    z.z_S = z_S;
    std::vector<int> next(static_cast<std::size_t>(r));
    for (std::size_t s = 0; s < lattice.size(); ++s) {
        const auto u = lattice.state(s);
        z.z_C.assign(u.begin(), u.end());
        for (std::size_t idx = 0; idx < Reaction::count(r); ++idx) {
            const Reaction k = Reaction::from_index(idx, r);
            const double lambda = scaled_propensity(params, k, z);
            if (lambda == 0.0) continue;
            // Jump of (z_S, z_P) scaled by sqrt(n), plus the jump of F(z_C).
            const auto st = stoichiometry(k, r);
            for (int i = 0; i < r; ++i) next[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)] + st[static_cast<std::size_t>(i)];
            const double j1 = st[static_cast<std::size_t>(r)] + poisson.F1(next) - poisson.F1(u);
            const double j2 = st[static_cast<std::size_t>(r + 1)] + poisson.F2(next) - poisson.F2(u);
            const double w = pi[s] * lambda;
            d.a11 += w * j1 * j1;
            d.a12 += w * j1 * j2;
            d.a22 += w * j2 * j2;
        }
    }
    d.a21 = d.a12;
    return d;
}

FluctuationModel::FluctuationModel(MatrixFn drift, MatrixFn diffusion, double T)
    : drift_(std::move(drift)), diffusion_(std::move(diffusion)), T_(T) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("horizon T must be finite and > 0");
}

FluctuationModel FluctuationModel::from_cascade(const CascadeParams& params, const ReducedPath& path) {
    auto drift = [params, path](double t) { return drift_matrix(params, path.z_s(t)); };
    auto diffusion = [params, path](double t) { return diffusion_rate(params, path.z_s(t)); };
    return FluctuationModel(drift, diffusion, path.T());
}

Mat2 CovariancePath::operator()(double t) const {
    const auto y = sol_(t);
    return {y[0], y[1], y[1], y[2]};
}

CovariancePath solve_covariance(const FluctuationModel& model, const Mat2& sigma0, double T,
                                const OdeOptions& options) {
    if (T > model.T() * (1.0 + 1e-12)) throw ValidationError("covariance horizon exceeds the model horizon");
    const auto [lo, hi] = symmetric_eigenvalues(sigma0);
    if (lo < -1e-12 * std::max(1.0, hi) || sigma0.a12 != sigma0.a21)
        throw ValidationError("initial covariance must be symmetric PSD");
    auto rhs = [&model](double t, std::span<const double> y, std::span<double> dy) {
        const Mat2 a = model.drift(t);
        const Mat2 s{y[0], y[1], y[1], y[2]};
        const Mat2 ds = a * s + s * a.transpose() + model.diffusion(t);
        dy[0] = ds.a11;
        dy[1] = ds.a12;
        dy[2] = ds.a22;
    };
    return CovariancePath(integrate_dopri5(rhs, 0.0, {sigma0.a11, sigma0.a12, sigma0.a22}, T, options));
}

namespace {

std::vector<kernels::EmCoefficients> em_table(const FluctuationModel& model, double T, std::size_t steps) {
    if (!(T > 0.0) || T > model.T() * (1.0 + 1e-12))
        throw ValidationError("simulation horizon must lie in (0, model horizon]");
    const double dt = T / static_cast<double>(steps);
    const double sq = std::sqrt(dt);
    std::vector<kernels::EmCoefficients> table(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = dt * static_cast<double>(k);
        const Mat2 a = model.drift(t);
        const Mat2 s = sqrt_psd(model.diffusion(t));
        table[k] = {a.a11 * dt, a.a21 * dt, s.a11 * sq, s.a12 * sq, s.a22 * sq};
    }
    return table;
}

constexpr std::size_t default_steps = 4096;
constexpr std::size_t block_size = 256;

}  // namespace

FluctuationPath simulate_fluctuation(const FluctuationModel& model, double u_s0, double u_p0, double T,
                                     std::size_t steps, std::uint64_t seed) {
    if (steps == 0) steps = default_steps;
    const auto table = em_table(model, T, steps);
    auto eng = make_engine(seed);
    NormalSource normal;
    FluctuationPath path;
    path.t.reserve(steps + 1);
    path.u_s.reserve(steps + 1);
    path.u_p.reserve(steps + 1);
    double us = u_s0, up = u_p0;
    path.t.push_back(0.0);
    path.u_s.push_back(us);
    path.u_p.push_back(up);
    for (std::size_t k = 0; k < steps; ++k) {
        const double xi1 = normal(eng);
        const double xi2 = normal(eng);
        kernels::scalar::em_step(table[k], {&us, 1}, {&up, 1}, {&xi1, 1}, {&xi2, 1});
        path.t.push_back(T * static_cast<double>(k + 1) / static_cast<double>(steps));
        path.u_s.push_back(us);
        path.u_p.push_back(up);
    }
    return path;
}

FluctuationSample simulate_fluctuation_batch(const FluctuationModel& model, double u_s0, double u_p0,
                                             double T, std::size_t steps, std::size_t reps,
                                             std::uint64_t base_seed, unsigned threads) {
    if (steps == 0) steps = default_steps;
    const auto table = em_table(model, T, steps);
    FluctuationSample out;
    out.u_s.assign(reps, u_s0);
    out.u_p.assign(reps, u_p0);
    const std::size_t blocks = (reps + block_size - 1) / block_size;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * block_size;
        const std::size_t len = std::min(block_size, reps - begin);
        auto eng = make_engine(stream_seed(base_seed, b));
        NormalSource normal;
        std::vector<double> xi1(len), xi2(len);
        std::span<double> us(out.u_s.data() + begin, len), up(out.u_p.data() + begin, len);
        for (std::size_t k = 0; k < steps; ++k) {
            for (std::size_t j = 0; j < len; ++j) {
                xi1[j] = normal(eng);
                xi2[j] = normal(eng);
            }
            kernels::em_step(table[k], us, up, xi1, xi2);
        }
    });
    return out;
}

FluctuationSample empirical_fluctuation(const GridBatch& batch, const ScalingRegime& regime,
                                        const ReducedPath& reduced, std::optional<std::size_t> g) {
    const auto& grid = batch.grid();
    if (grid.empty()) throw ValidationError("SSA batch has an empty grid");
    const std::size_t at = g.value_or(grid.size() - 1);
    if (at >= grid.size()) throw ValidationError("grid index out of range");
    if (grid[at] > reduced.T() * (1.0 + 1e-12))
        throw ValidationError("SSA grid extends past the reduced path's horizon");
    const double n = static_cast<double>(regime.n);
    const double tol = 1.0 / n;
    if (grid.front() == 0.0) {
        for (std::size_t k = 0; k < batch.reps(); ++k) {
            if (std::abs(batch.z_s(k, 0) - reduced.z_s0()) > tol || std::abs(batch.z_p(k, 0) - reduced.z_p0()) > tol)
                throw ValidationError("SSA batch and reduced path start from different initial conditions");
        }
    }
    const double rn = std::sqrt(n);
    const double zs = reduced.z_s(grid[at]);
    const double zp = reduced.z_p(grid[at]);
    FluctuationSample out;
    out.u_s.resize(batch.reps());
    out.u_p.resize(batch.reps());
    for (std::size_t k = 0; k < batch.reps(); ++k) {
        out.u_s[k] = rn * (batch.z_s(k, at) - zs);
        out.u_p[k] = rn * (batch.z_p(k, at) - zp);
    }
    return out;
}

SampleMoments sample_moments(const FluctuationSample& sample) {
    const std::size_t m = sample.size();
    if (m < 2) throw ValidationError("moments need at least two samples");
    const double dm = static_cast<double>(m);
    SampleMoments mo;
    for (std::size_t k = 0; k < m; ++k) {
        mo.mean_s += sample.u_s[k];
        mo.mean_p += sample.u_p[k];
    }
    mo.mean_s /= dm;
    mo.mean_p /= dm;
    double css = 0, csp = 0, cpp = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double a = sample.u_s[k] - mo.mean_s, b = sample.u_p[k] - mo.mean_p;
        css += a * a;
        csp += a * b;
        cpp += b * b;
    }
    mo.cov = {css / (dm - 1), csp / (dm - 1), csp / (dm - 1), cpp / (dm - 1)};
    mo.se_mean_s = std::sqrt(mo.cov.a11 / dm);
    mo.se_mean_p = std::sqrt(mo.cov.a22 / dm);
    // Standard error of each covariance entry from the spread of the centred products.
    double vss = 0, vsp = 0, vpp = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double a = sample.u_s[k] - mo.mean_s, b = sample.u_p[k] - mo.mean_p;
        vss += (a * a - mo.cov.a11) * (a * a - mo.cov.a11);
        vsp += (a * b - mo.cov.a12) * (a * b - mo.cov.a12);
        vpp += (b * b - mo.cov.a22) * (b * b - mo.cov.a22);
    }
    const double denom = (dm - 1) * dm;
    mo.se_cov = {std::sqrt(vss / denom), std::sqrt(vsp / denom), std::sqrt(vsp / denom), std::sqrt(vpp / denom)};
    return mo;
}

}  // namespace cascade
