// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cascade/fclt.hpp"
#include "cascade/infer.hpp"
#include "cascade/ips.hpp"
#include "cascade/kernels.hpp"
#include "cascade/lattice.hpp"
#include "cascade/poisson.hpp"
#include "cascade/qssa.hpp"
#include "cascade/ssa.hpp"
#include "oracles.hpp"
#include "studies.hpp"

using namespace cascade;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

CascadeParams random_params(std::mt19937_64& rng, int r, int J) {
    std::uniform_real_distribution<double> lr(std::log(0.05), std::log(20.0));
    std::vector<double> f(static_cast<std::size_t>(r)), b(static_cast<std::size_t>(r));
    for (auto& v : f) v = std::exp(lr(rng));
    for (auto& v : b) v = std::exp(lr(rng));
    return CascadeParams(J, f, b, std::exp(lr(rng)));
}

oracle::Rates to_oracle(const CascadeParams& p) {
    oracle::Rates k;
    k.J = p.J();
    for (int i = 1; i <= p.r(); ++i) {
        k.fwd.push_back(p.forward(i));
        k.bwd.push_back(p.backward(i));
    }
    k.kP = p.product();
    return k;
}

Outcome stationary_oracle(unsigned) {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    std::size_t cases = 0;
    for (int r = 1; r <= 3; ++r)
        for (int J = 1; J <= 5; ++J)
            for (int trial = 0; trial < 50; ++trial) {
                const auto p = random_params(rng, r, J);
                const auto S = oracle::states(r, J);
                const Lattice lat(r, J);
                for (double z : {0.1, 1.0, 10.0}) {
                    const auto ref = oracle::stationary(oracle::generator(to_oracle(p), z, S));
                    const auto pmf = stationary_pmf(p, z, lat);
                    double tv = 0.0;
                    for (std::size_t s = 0; s < S.size(); ++s) tv += std::abs(ref[s] - pmf[lat.index_of(S[s])]);
                    worst = std::max(worst, 0.5 * tv);
                    ++cases;
                }
            }
    return {worst <= 1e-10, fmt("max TV %.3g over %zu cases (tol 1e-10)", worst, cases)};
}

Outcome two_stage_closed_form(unsigned) {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> lz(std::log(0.01), std::log(100.0));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(rng, 2, 1 + trial % 10);
        const double z = std::exp(lz(rng));
        const auto w = stationary_weights(p, z);
        const auto [p1, p2] = oracle::two_stage(to_oracle(p), z);
        worst = std::max({worst, std::abs(w.p[0] - p1), std::abs(w.p[1] - p2)});
    }
    return {worst <= 1e-12, fmt("max |dp| %.3g over 100 instances (tol 1e-12)", worst)};
}

Outcome flux_balance(unsigned) {
    std::mt19937_64 rng(303);
    std::vector<CascadeParams> sets{cli::two_stage_example(), cli::one_stage_example()};
    for (int r = 1; r <= 3; ++r)
        for (int t = 0; t < 10; ++t) sets.push_back(random_params(rng, r, 1 + (t * 3) % 10));
    double worst = 0.0;
    for (const auto& p : sets)
        for (double lz = -3.0; lz <= 3.0 + 1e-9; lz += 0.25) {
            const double z = std::pow(10.0, lz);
            const auto avg = averaged_propensities(p, z);
            const auto w = stationary_weights(p, z);
            const double gap = std::abs(avg.binding - avg.unbinding - p.product() * p.J() * w.p.back());
            worst = std::max(worst, gap / (1.0 + avg.binding));
        }
    return {worst <= 1e-10, fmt("max scaled imbalance %.3g over %zu rate sets (tol 1e-10)", worst, sets.size())};
}

Outcome poisson_certificate(unsigned) {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> lz(std::log(0.05), std::log(20.0));
    double worst = 0.0;
    std::size_t cases = 0;
    for (int r = 1; r <= 3; ++r)
        for (int J : {1, 5, 10})
            for (int trial = 0; trial < 20; ++trial) {
                const auto sol = solve_poisson(random_params(rng, r, J), std::exp(lz(rng)));
                worst = std::max(worst, sol.residual_max);
                ++cases;
            }
    const auto tp = solve_poisson(cli::two_stage_example(), 1.0);
    const double e2 = std::max(std::abs(tp.b2[0] - 0.030303), std::abs(tp.b2[1] - 0.090909));
    const double e1 = std::max(std::abs(tp.b1[0] - 0.969697), std::abs(tp.b1[1] - 0.909091));
    return {worst <= 1e-8 && e1 <= 1e-6 && e2 <= 1e-6,
            fmt("max residual %.3g over %zu instances (tol 1e-8); test point F1 err %.2g, F2 err %.2g (tol 1e-6)",
                worst, cases, e1, e2)};
}

Outcome flln(unsigned threads) {
    const auto p = cli::two_stage_example();
    const double T = 5.0;
    const auto path = solve_reduced_ode(p, 1.0, 0.0, T);
    double mean[2] = {0.0, 0.0};
    const std::int64_t ns[2] = {100, 1000};
    for (int i = 0; i < 2; ++i) {
        const ScalingRegime reg(ns[i]);
        const auto errs = sup_error_batch(p, reg, initial_state(2, reg, 1.0), T, path, 100,
                                          stream_seed(505, static_cast<std::uint64_t>(ns[i])), threads);
        for (const auto& e : errs) mean[i] += e.z_p / static_cast<double>(errs.size());
    }
    return {mean[1] <= 0.05 && mean[1] < mean[0],
            fmt("mean sup|Z_P^n - Z_P|: n=100 %.4f, n=1000 %.4f (need n=1000 <= 0.05 and decreasing)", mean[0],
                mean[1])};
}

Outcome fclt(unsigned threads) {
    const auto p = cli::one_stage_example();
    const double T = 1.0;
    const ScalingRegime reg(10000);
    const auto x0 = initial_state(1, reg, 1.0);
    const auto path = solve_reduced_ode(p, 1.0, 0.0, T);
    const auto model = FluctuationModel::from_cascade(p, path);
    const auto sigma = solve_covariance(model, {}, T)(T);

    const auto batch = simulate_grid_batch(p, reg, x0, T, {0.0, T}, 2000, 606, threads);
    const auto emp = sample_moments(empirical_fluctuation(batch, reg, path));
    const double rel[3] = {std::abs(emp.cov.a11 / sigma.a11 - 1.0), std::abs(emp.cov.a12 / sigma.a12 - 1.0),
                           std::abs(emp.cov.a22 / sigma.a22 - 1.0)};
    const double worst_rel = std::max({rel[0], rel[1], rel[2]});

    const auto em = sample_moments(simulate_fluctuation_batch(model, 0.0, 0.0, T, 0, 20000, 607, threads));
    const double z[3] = {std::abs(em.cov.a11 - sigma.a11) / em.se_cov.a11,
                         std::abs(em.cov.a12 - sigma.a12) / em.se_cov.a12,
                         std::abs(em.cov.a22 - sigma.a22) / em.se_cov.a22};
    const double worst_z = std::max({z[0], z[1], z[2]});
    return {worst_rel <= 0.15 && worst_z <= 3.0,
            fmt("Sigma(T) = (%.4f, %.4f, %.4f); SSA n=1e4 x2000 rel err max %.3f (tol 0.15); "
                "EM x20000 max |dev|/SE %.2f (tol 3); simd=%s",
                sigma.a11, sigma.a12, sigma.a22, worst_rel, worst_z,
                std::string(kernels::isa_name(kernels::active_isa())).c_str())};
}

Outcome chaos(unsigned threads) {
    const auto hazard = ConversionHazard::cascade(cli::one_stage_example());
    const auto rep = chaos_diagnostics(hazard, 10000, 200, 2.0, 708, threads);
    return {rep.survival_sup_dist <= 0.02 && std::abs(rep.pair_corr) <= 0.05,
            fmt("survival sup-dist %.4f (tol 0.02, se %.4f); pair corr %.4f (tol 0.05, se %.4f); "
                "particle-1/2 only: sup-dist %.4f, corr %.4f (se %.4f)",
                rep.survival_sup_dist, rep.stderr_survival, rep.pair_corr, rep.stderr_pair_corr,
                rep.survival_sup_dist_particle1, rep.pair_corr_particles12, rep.stderr_pair_corr_particles12)};
}

Outcome mle_recovery(unsigned threads) {
    const auto p = cli::one_stage_example();
    cli::SyntheticDesign design;
    design.n = 100000;
    design.T = 2.0;
    design.K = 1000;
    const auto fits = cli::mle_replicates(ConversionHazard::cascade(p), p.J(), design, {1e-3, 1e-3}, {10.0, 10.0},
                                          8, 200, 809, threads);
    const double truth[2] = {p.michaelis_constant(), p.product()};
    bool ok = true;
    std::string detail;
    const char* names[2] = {"kappa_M", "kappa_P"};
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<double> est;
        for (const auto& f : fits) est.push_back(f.theta[j]);
        const double med = cli::median(est);
        const auto kd = kde_summary(est);
        const bool good = std::abs(med / truth[j] - 1.0) <= 0.1 && std::abs(kd.mode / truth[j] - 1.0) <= 0.1 &&
                          kd.modes == 1;
        ok = ok && good;
        detail += fmt("%s%s median %.4f, KDE mode %.4f, %zu mode(s) (truth %.3f)", j ? "; " : "", names[j], med,
                      kd.mode, kd.modes, truth[j]);
    }
    return {ok, detail + "; 200 replicates, n=1e5, K=1000, T=2"};
}

Outcome bayes_recovery(unsigned threads) {
    const auto p = cli::one_stage_example();
    cli::SyntheticDesign design;
    design.n = 100000;
    design.T = 3.0;
    design.K = 1000;
    const auto data = cli::synthetic_taus(ConversionHazard::cascade(p), design, 910);
    const auto problem = michaelis_menten_problem(data, p.J(), {1e-3, 1e-3}, {10.0, 10.0});
    const PriorSpec prior{PriorSpec::Kind::independent_uniform, {0.0, 0.0}, {0.5, 1.0}};
    const auto post = fit_bayes(problem, prior, ChainOptions{}, 911, threads);
    const double truth[2] = {p.michaelis_constant(), p.product()};
    bool ok = post.acceptance_rate >= 0.15 && post.acceptance_rate <= 0.5;
    std::string detail = fmt("acceptance %.3f (need [0.15, 0.5])", post.acceptance_rate);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto kd = kde_summary(post.marginal(j));
        ok = ok && std::abs(kd.mode / truth[j] - 1.0) <= 0.1;
        detail += fmt("; %s mode %.4f (truth %.3f)", post.names[j].c_str(), kd.mode, truth[j]);
    }
    return {ok, detail + "; 1000 burn-in + 5000 kept, T=3, K=1000"};
}

Outcome exponential_limit(unsigned) {
    // kappa_M far above the substrate scale makes h linear with slope c = J kappa_P / kappa_M
    const int J = 10;
    const double kappa_M = 1e9, c_true = 1.3;
    const auto hazard = ConversionHazard::michaelis_menten(J, kappa_M, c_true * kappa_M / J);
    const auto path = solve_reduced_ode(hazard, 1.0, 0.0, 2.0);
    std::vector<double> kept;
    for (double t : simulate_tagged(path, 4000, 1011))
        if (t <= 2.0 && kept.size() < 1000) kept.push_back(t);
    const auto data = tau_sample_from_draws(kept, 2.0);

    InferenceProblem problem;
    problem.data = data;
    problem.r = 1;
    problem.J = J;
    problem.parameterization = Parameterization::michaelis_menten;
    problem.base = {kappa_M, c_true * kappa_M / J};
    problem.free = {1};
    problem.lower = {1e6};
    problem.upper = {kappa_M - 1.0};
    problem.ode.atol = 1e-13;
    problem.ode.rtol = 1e-12;
    MleOptions opt;
    opt.starts = 4;
    const auto fit = fit_mle(problem, opt, 1012);
    const double c_hat = fit.theta[0] * J / kappa_M;
    const double c_ref = oracle::truncated_exponential_mle(data.times, data.T);
    const double rel = std::abs(c_hat / c_ref - 1.0);
    return {rel <= 1e-6, fmt("fitted c %.10f vs closed form %.10f, rel err %.2g (tol 1e-6)", c_hat, c_ref, rel)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    unsigned threads = 1;
    std::string only;
    app.add_option("--threads", threads, "worker threads");
    app.add_option("--only", only, "run only criteria whose name contains this text");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome(unsigned)>>> criteria{
        {"stationary-oracle", stationary_oracle},
        {"two-stage-closed-form", two_stage_closed_form},
        {"flux-balance", flux_balance},
        {"poisson-certificate", poisson_certificate},
        {"flln", flln},
        {"fclt", fclt},
        {"propagation-of-chaos", chaos},
        {"mle-recovery", mle_recovery},
        {"bayes-recovery", bayes_recovery},
        {"exponential-limit", exponential_limit},
    };

    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && std::string(name).find(only) == std::string::npos) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome res;
        try {
            res = check(threads);
        } catch (const std::exception& e) {
            res = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %s: %s [%.1fs]\n", res.pass ? "PASS" : "FAIL", name, res.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !res.pass;
    }
    return failures == 0 ? 0 : 1;
}
