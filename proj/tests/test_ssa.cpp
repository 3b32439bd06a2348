#include <cmath>
#include <map>

#include "cascade/qssa.hpp"
#include "cascade/ssa.hpp"
#include "doctest.h"

using namespace cascade;

namespace {

CascadeParams fig1(int J = 10) { return CascadeParams(J, {1.0, 1.0}, {1.0, 1.0}, 0.1); }

}  // namespace

TEST_CASE("same seed, same path") {
    const ScalingRegime reg(200);
    const auto x0 = initial_state(2, reg, 1.0);
    const auto a = simulate_full(fig1(), reg, x0, 1.0, 42);
    const auto b = simulate_full(fig1(), reg, x0, 1.0, 42);
    const auto c = simulate_full(fig1(), reg, x0, 1.0, 43);
    CHECK(a.event_times == b.event_times);
    CHECK(a.states == b.states);
    CHECK(a.event_times != c.event_times);
    CHECK(a.states.size() == a.event_times.size() + 1);
    CHECK(a.states.front() == x0);
}

TEST_CASE("conservation along a path") {
    const ScalingRegime reg(500);
    const auto p = fig1(4);
    const auto x0 = initial_state(2, reg, 1.0, 0.2);
    const auto traj = simulate_full(p, reg, x0, 2.0, 7);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& x = traj.states[k];
        CHECK(x.substrate_mass() == x0.substrate_mass());
        CHECK(x.enzyme_free(4) >= 0);
        CHECK(x.x_S >= 0);
        if (k > 0) CHECK(traj.event_times[k - 1] <= 2.0);
    }
    const auto scaled = scale_trajectory(traj);
    for (const auto& z : scaled.states) {
        double cs = 0.0;
        for (int c : z.z_C) cs += c;
        CHECK(z.z_S + z.z_P + cs / 500.0 == doctest::Approx(1.2).epsilon(1e-12));
    }
}

TEST_CASE("absorbing state stops the clock") {
    const ScalingRegime reg(3);
    const CascadeParams p(2, {1.0}, {0.5}, 2.0);
    FullState x0{{0}, 0, 3};
    const auto traj = simulate_full(p, reg, x0, 10.0, 1);
    CHECK(traj.absorbed);
    CHECK(traj.event_times.empty());

    SsaStepper st(p, reg, FullState{{0}, 2, 0});
    Engine eng = make_engine(5);
    SsaStepper::Outcome out;
    int fired = 0;
    while ((out = st.step(eng, 1e9)) == SsaStepper::Outcome::fired) ++fired;
    CHECK(out == SsaStepper::Outcome::absorbed);
    CHECK(st.state().x_P == 2);
    CHECK(st.state().x_S == 0);
    CHECK(fired >= 4);
}

TEST_CASE("first reaction frequencies match propensities") {
    const ScalingRegime reg(20);
    const auto p = CascadeParams(3, {0.5, 1.5}, {0.7, 0.3}, 1.1);
    const FullState x0{{1, 1}, 20, 0};
    // kappa_1 x_S x_E, and n kappa x_C for the rest
    const std::vector<double> a{0.5 * 20 * 1, 20 * 0.7 * 1, 20 * 1.5 * 1, 20 * 0.3 * 1, 20 * 1.1 * 1};
    double total = 0.0;
    for (double v : a) total += v;
    std::vector<int> count(5, 0);
    const int trials = 100000;
    double mean_wait = 0.0;
    for (int s = 0; s < trials; ++s) {
        SsaStepper st(p, reg, x0);
        Engine eng = make_engine(static_cast<std::uint64_t>(s));
        REQUIRE(st.step(eng, 1e9) == SsaStepper::Outcome::fired);
        ++count[st.last_index()];
        mean_wait += st.time() / trials;
    }
    for (std::size_t k = 0; k < 5; ++k) {
        const double q = a[k] / total;
        const double se = std::sqrt(q * (1 - q) / trials);
        CHECK(std::abs(static_cast<double>(count[k]) / trials - q) <= 3 * se);
    }
    CHECK(std::abs(mean_wait - 1.0 / total) <= 3.0 / total / std::sqrt(trials));
}

TEST_CASE("grid sampling conventions") {
    ScaledPath path;
    path.r = 1;
    path.J = 1;
    path.T = 2.0;
    path.times = {0.0, 0.5, 1.5};
    path.states = {{{0}, 1.0, 0.0}, {{1}, 0.9, 0.0}, {{0}, 0.9, 0.1}};
    const std::vector<double> grid{0.0, 0.49, 0.5, 1.0, 1.5, 2.0};
    const auto v = sample_on_grid(path, grid);
    CHECK(v[0].z_S == 1.0);
    CHECK(v[1].z_S == 1.0);
    CHECK(v[2].z_C[0] == 1);
    CHECK(v[3].z_C[0] == 1);
    CHECK(v[4].z_P == 0.1);
    CHECK(v[5].z_P == 0.1);
    const std::vector<double> unsorted{0.5, 0.2};
    CHECK_THROWS_AS(sample_on_grid(path, unsorted), ValidationError);
    const std::vector<double> outside{0.5, 2.5};
    CHECK_THROWS_AS(sample_on_grid(path, outside), ValidationError);

    const auto occ = occupation_measure(path, 2.0);
    CHECK(occ.weights[0] == doctest::Approx(1.0));
    CHECK(occ.weights[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(occupation_measure(path, 2.5), ValidationError);
}

TEST_CASE("grid simulation agrees with the full log") {
    const ScalingRegime reg(300);
    const auto x0 = initial_state(2, reg, 1.0);
    const auto traj = simulate_full(fig1(), reg, x0, 1.0, 11);
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
    const auto direct = simulate_on_grid(fig1(), reg, x0, 1.0, grid, 11);
    const auto logged = sample_on_grid(scale_trajectory(traj), grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        CHECK(direct[g].z_C == logged[g].z_C);
        CHECK(direct[g].z_S == logged[g].z_S);
        CHECK(direct[g].z_P == logged[g].z_P);
    }
}

TEST_CASE("occupation measure approaches the averaged stationary law") {
    const ScalingRegime reg(1000000);
    const CascadeParams p(10, {2.0}, {0.2}, 0.1);
    const double t = 0.1;
    const auto traj = simulate_full(p, reg, initial_state(1, reg, 1.0), t, 3);
    const auto occ = occupation_measure(scale_trajectory(traj), t);
    double mass = 0.0;
    for (double w : occ.weights) mass += w;
    CHECK(mass == doctest::Approx(t).epsilon(1e-12));

    // time-average of the binomial law along the reduced path
    const auto path = solve_reduced_ode(p, 1.0, 0.0, t);
    const int m = 400;
    std::vector<double> expect(11, 0.0);
    for (int i = 0; i < m; ++i) {
        const double z = path.z_s((i + 0.5) * t / m);
        const double q = 2.0 * z / (2.0 * z + 0.3);
        for (int k = 0; k <= 10; ++k)
            expect[static_cast<std::size_t>(k)] += std::exp(std::lgamma(11.0) - std::lgamma(k + 1.0) - std::lgamma(11.0 - k)) *
                                                    std::pow(q, k) * std::pow(1 - q, 10 - k) / m;
    }
    double tv = 0.0;
    for (std::size_t s = 0; s < occ.lattice.size(); ++s)
        tv += std::abs(occ.weights[s] / t - expect[static_cast<std::size_t>(occ.lattice.state(s)[0])]);
    CHECK(0.5 * tv <= 0.02);
}

TEST_CASE("batches do not depend on the thread count") {
    const ScalingRegime reg(100);
    const auto x0 = initial_state(2, reg, 1.0);
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const auto one = simulate_grid_batch(fig1(), reg, x0, 1.0, grid, 24, 9, 1);
    const auto four = simulate_grid_batch(fig1(), reg, x0, 1.0, grid, 24, 9, 4);
    for (std::size_t k = 0; k < 24; ++k)
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CHECK(one.z_s(k, g) == four.z_s(k, g));
            CHECK(one.z_p(k, g) == four.z_p(k, g));
            CHECK(one.z_c(k, g, 2) == four.z_c(k, g, 2));
        }
    const auto single = simulate_on_grid(fig1(), reg, x0, 1.0, grid, stream_seed(9, 5));
    CHECK(single[2].z_S == one.z_s(5, 2));

    const auto path = solve_reduced_ode(fig1(), 1.0, 0.0, 1.0);
    const auto e1 = sup_error_batch(fig1(), reg, x0, 1.0, path, 8, 4, 1);
    const auto e3 = sup_error_batch(fig1(), reg, x0, 1.0, path, 8, 4, 3);
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(e1[k].z_s == e3[k].z_s);
        CHECK(e1[k].z_s >= 0.0);
    }
}

TEST_CASE("sup error shrinks with n") {
    const auto p = fig1();
    const auto path = solve_reduced_ode(p, 1.0, 0.0, 2.0);
    auto mean_err = [&](std::int64_t n) {
        const ScalingRegime reg(n);
        const auto errs = sup_error_batch(p, reg, initial_state(2, reg, 1.0), 2.0, path, 20, 77, 1);
        double acc = 0.0;
        for (const auto& e : errs) acc += std::max(e.z_s, e.z_p) / errs.size();
        return acc;
    };
    const double small = mean_err(100), large = mean_err(2000);
    CHECK(large < small);
    CHECK(large < 0.05);
}
