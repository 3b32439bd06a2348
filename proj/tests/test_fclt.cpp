#include <cmath>
#include <random>

#include "cascade/fclt.hpp"
#include "doctest.h"

using namespace cascade;

namespace {

CascadeParams fig1(int J = 10) { return CascadeParams(J, {1.0, 1.0}, {1.0, 1.0}, 0.1); }
CascadeParams mm_rates(int J = 10) { return CascadeParams(J, {2.0}, {0.2}, 0.1); }

CascadeParams random_params(std::mt19937_64& rng, int r, int J) {
    std::uniform_real_distribution<double> lr(std::log(0.05), std::log(20.0));
    std::vector<double> f(static_cast<std::size_t>(r)), b(static_cast<std::size_t>(r));
    for (auto& v : f) v = std::exp(lr(rng));
    for (auto& v : b) v = std::exp(lr(rng));
    return CascadeParams(J, f, b, std::exp(lr(rng)));
}

FluctuationModel constant_model(Mat2 a, Mat2 d, double T) {
    return FluctuationModel([a](double) { return a; }, [d](double) { return d; }, T);
}

}  // namespace

TEST_CASE("drift of the one-stage cascade") {
    const auto p = mm_rates();
    for (double z : {0.0, 0.1, 1.0, 4.0}) {
        const auto a = drift_matrix(p, z);
        const double expect = -10 * 0.1 * 0.15 / ((0.15 + z) * (0.15 + z));
        CHECK(a.a11 == doctest::Approx(expect).epsilon(1e-12));
        CHECK(a.a21 == doctest::Approx(-expect).epsilon(1e-12));
        CHECK(a.a12 == 0.0);
        CHECK(a.a22 == 0.0);
    }
    CHECK(std::abs(drift_matrix(p, 1e6).a11) < 1e-10);
}

TEST_CASE("drift is the Jacobian of the reduced vector field") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = random_params(rng, 1 + trial % 3, 1 + trial % 6);
        const FastBlockLaw law(p);
        for (double z : {0.05, 0.5, 2.0, 9.0}) {
            const double h = 1e-3 * std::max(1.0, z);
            auto d5 = [&](auto&& f) {
                return (f(z - 2 * h) - 8 * f(z - h) + 8 * f(z + h) - f(z + 2 * h)) / (12 * h);
            };
            const double fd11 = -d5([&](double x) { return law.h(x); });
            const double fd21 = d5([&](double x) { return law.product_flux(x); });
            const auto a = drift_matrix(p, z);
            CHECK(a.a11 == doctest::Approx(fd11).epsilon(1e-6).scale(1e-3));
            CHECK(a.a21 == doctest::Approx(fd21).epsilon(1e-6).scale(1e-3));
        }
    }
}

TEST_CASE("diffusion rate at the worked example") {
    const auto d = diffusion_rate(fig1(), 1.0);
    CHECK(d.a22 == doctest::Approx(0.280212).epsilon(1e-6));
    const auto sol = solve_poisson(fig1(), 1.0);
    const auto e = diffusion_rate_enumerated(fig1(), 1.0, sol);
    CHECK(std::abs(e.a22 - 0.280212) < 1e-6);
}

TEST_CASE("closed-form and enumerated diffusion agree and are PSD") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> lz(-3, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(rng, 1 + trial % 3, 1 + trial % 5);
        const double z = std::exp(lz(rng));
        const auto sol = solve_poisson(p, z);
        const auto d = diffusion_rate(p, z, sol);
        const auto e = diffusion_rate_enumerated(p, z, sol);
        const double scale = std::max(1.0, std::abs(d.a11) + std::abs(d.a22));
        CHECK(std::abs(d.a11 - e.a11) <= 1e-10 * scale);
        CHECK(std::abs(d.a12 - e.a12) <= 1e-10 * scale);
        CHECK(std::abs(d.a22 - e.a22) <= 1e-10 * scale);
        CHECK(symmetric_eigenvalues(d).first >= -1e-12 * scale);
        CHECK(d.a12 == d.a21);
    }
    PoissonSolution bogus = solve_poisson(fig1(), 1.0);
    bogus.certified = false;
    CHECK_THROWS_AS(diffusion_rate(fig1(), 1.0, bogus), ValidationError);
}

TEST_CASE("covariance ODE special cases") {
    const auto brownian = constant_model({}, Mat2::identity(), 2.0);
    const Mat2 s0{0.5, 0.1, 0.1, 0.3};
    const auto cov = solve_covariance(brownian, s0, 2.0);
    const auto s = cov(1.5);
    CHECK(s.a11 == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(s.a12 == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(s.a22 == doctest::Approx(1.8).epsilon(1e-9));

    // D = 0: Sigma(t) = Phi Sigma0 Phi^T with Phi from the time-dependent scalar A11
    const auto p = mm_rates();
    const auto path = solve_reduced_ode(p, 1.0, 0.0, 1.0);
    FluctuationModel no_noise([&](double t) { return drift_matrix(p, path.z_s(t)); },
                              [](double) { return Mat2{}; }, 1.0);
    const Mat2 init{1.0, 0.0, 0.0, 0.0};
    const auto c = solve_covariance(no_noise, init, 1.0, {1e-12, 1e-10});
    // Phi11 = exp(int a11), Phi21 = -(Phi11 - 1) because a21 = -a11
    double integral = 0.0;
    const int m = 20000;
    for (int i = 0; i < m; ++i) {
        const double t = (i + 0.5) / m;
        integral += drift_matrix(p, path.z_s(t)).a11 / m;
    }
    const double phi11 = std::exp(integral), phi21 = 1.0 - phi11;
    const auto s1 = c(1.0);
    CHECK(s1.a11 == doctest::Approx(phi11 * phi11).epsilon(1e-7));
    CHECK(s1.a12 == doctest::Approx(phi11 * phi21).epsilon(1e-7));
    CHECK(s1.a22 == doctest::Approx(phi21 * phi21).epsilon(1e-7));
}

TEST_CASE("covariance increments are PSD along the cascade model") {
    const auto p = mm_rates();
    const auto path = solve_reduced_ode(p, 1.0, 0.0, 1.0);
    const auto model = FluctuationModel::from_cascade(p, path);
    const auto cov = solve_covariance(model, {}, 1.0);
    for (int i = 0; i <= 20; ++i) {
        const auto s = cov(0.05 * i);
        CHECK(symmetric_eigenvalues(s).first >= -1e-10);
    }
}

TEST_CASE("Euler-Maruyama") {
    const auto quiet = constant_model({-1.0, 0.0, 1.0, 0.0}, {}, 1.0);
    const auto still = simulate_fluctuation(quiet, 0.0, 0.0, 1.0, 0, 1);
    CHECK(still.t.size() == 4097);
    for (std::size_t k = 0; k < still.t.size(); ++k) {
        CHECK(still.u_s[k] == 0.0);
        CHECK(still.u_p[k] == 0.0);
    }

    const auto bm = constant_model({}, Mat2::identity(), 2.0);
    const auto sample = simulate_fluctuation_batch(bm, 0.0, 0.0, 2.0, 64, 20000, 99, 1);
    const auto mo = sample_moments(sample);
    CHECK(std::abs(mo.cov.a11 - 2.0) <= 3 * mo.se_cov.a11);
    CHECK(std::abs(mo.cov.a22 - 2.0) <= 3 * mo.se_cov.a22);
    CHECK(std::abs(mo.cov.a12) <= 3 * mo.se_cov.a12);

    // the batch does not depend on how blocks are spread over threads
    const auto again = simulate_fluctuation_batch(bm, 0.0, 0.0, 2.0, 64, 1000, 5, 1);
    const auto threaded = simulate_fluctuation_batch(bm, 0.0, 0.0, 2.0, 64, 1000, 5, 4);
    CHECK(again.u_s == threaded.u_s);
    CHECK(again.u_p == threaded.u_p);
    CHECK_THROWS_AS(simulate_fluctuation(constant_model({}, {-1.0, 0.0, 0.0, 0.0}, 1.0), 0, 0, 1.0, 8, 1),
                    NumericalError);
}

TEST_CASE("Euler-Maruyama covariance matches the covariance ODE") {
    const auto p = mm_rates();
    const auto path = solve_reduced_ode(p, 1.0, 0.0, 1.0);
    const auto model = FluctuationModel::from_cascade(p, path);
    const auto sigma = solve_covariance(model, {}, 1.0)(1.0);
    const auto sample = simulate_fluctuation_batch(model, 0.0, 0.0, 1.0, 0, 10000, 2024, 1);
    const auto mo = sample_moments(sample);
    CHECK(std::abs(mo.cov.a11 - sigma.a11) <= 3 * mo.se_cov.a11);
    CHECK(std::abs(mo.cov.a12 - sigma.a12) <= 3 * mo.se_cov.a12);
    CHECK(std::abs(mo.cov.a22 - sigma.a22) <= 3 * mo.se_cov.a22);

    // halving dt changes the replicate variance of U_P(T) by well under its standard error
    const auto coarse = sample_moments(simulate_fluctuation_batch(model, 0.0, 0.0, 1.0, 2048, 10000, 2024, 1));
    CHECK(std::abs(coarse.cov.a22 - mo.cov.a22) <= mo.se_cov.a22);
}

TEST_CASE("empirical fluctuation bookkeeping") {
    const auto p = mm_rates();
    const ScalingRegime reg(400);
    const auto path = solve_reduced_ode(p, 1.0, 0.0, 0.5);
    const auto batch = simulate_grid_batch(p, reg, initial_state(1, reg, 1.0), 0.5, {0.0, 0.5}, 20, 3, 1);
    const auto at0 = empirical_fluctuation(batch, reg, path, 0);
    for (std::size_t k = 0; k < at0.size(); ++k) {
        CHECK(at0.u_s[k] == 0.0);
        CHECK(at0.u_p[k] == 0.0);
    }
    CHECK_NOTHROW(empirical_fluctuation(batch, reg, path));
    const auto other = solve_reduced_ode(p, 0.5, 0.0, 0.5);
    CHECK_THROWS_AS(empirical_fluctuation(batch, reg, other), ValidationError);
    const auto shorter = solve_reduced_ode(p, 1.0, 0.0, 0.25);
    CHECK_THROWS_AS(empirical_fluctuation(batch, reg, shorter), ValidationError);
}
