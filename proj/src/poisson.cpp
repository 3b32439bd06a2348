#include "cascade/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cascade/qssa.hpp"

namespace cascade {

FastGenerator::FastGenerator(CascadeParams params, double z_S)
    : params_(std::move(params)), z_S_(z_S), lattice_(params_.r(), params_.J()) {
    if (!(z_S >= 0.0) || !std::isfinite(z_S))
        throw ValidationError("frozen substrate level must be finite and >= 0");
}

std::vector<FastGenerator::Transition> FastGenerator::transitions(std::size_t state) const {
    const int r = params_.r();
    const auto u = lattice_.state(state);
    std::vector<int> v(u.begin(), u.end());
    int bound = 0;
    for (int c : v) bound += c;

    std::vector<Transition> out;
    auto push = [&](double rate) {
        if (rate > 0.0) out.push_back({lattice_.index_of(v), rate});
    };
    auto at = [&](int i) -> int& { return v[static_cast<std::size_t>(i - 1)]; };

    // binding: z -> z + e_1
    if (bound < params_.J()) {
        const double rate = params_.forward(1) * z_S_ * (params_.J() - bound);
        ++at(1);
        push(rate);
        --at(1);
    }
    // C_{i-1} -> C_i and back, i = 2..r
    for (int i = 2; i <= r; ++i) {
        if (at(i - 1) > 0) {
            const double rate = params_.forward(i) * at(i - 1);
            --at(i - 1);
            ++at(i);
            push(rate);
            ++at(i - 1);
            --at(i);
        }
        if (at(i) > 0) {
            const double rate = params_.backward(i) * at(i);
            ++at(i - 1);
            --at(i);
            push(rate);
            --at(i - 1);
            ++at(i);
        }
    }
    // unbinding: z -> z - e_1
    if (at(1) > 0) {
        const double rate = params_.backward(1) * at(1);
        --at(1);
        push(rate);
        ++at(1);
    }
    // product release: z -> z - e_r
    if (at(r) > 0) {
        const double rate = params_.product() * at(r);
        --at(r);
        push(rate);
        ++at(r);
    }
    return out;
}

double FastGenerator::apply(std::span<const double> f, std::span<const int> z_C) const {
    if (f.size() != lattice_.size())
        throw ValidationError("function is not defined on every state of B^r_{J,+}");
    const std::size_t s = lattice_.index_of(z_C);
    double acc = 0.0;
    for (const auto& tr : transitions(s)) acc += tr.rate * (f[tr.target] - f[s]);
    return acc;
}

std::vector<double> FastGenerator::apply_all(std::span<const double> f) const {
    if (f.size() != lattice_.size())
        throw ValidationError("function is not defined on every state of B^r_{J,+}");
    std::vector<double> out(lattice_.size());
    for (std::size_t s = 0; s < lattice_.size(); ++s) {
        double acc = 0.0;
        for (const auto& tr : transitions(s)) acc += tr.rate * (f[tr.target] - f[s]);
        out[s] = acc;
    }
    return out;
}

double apply_generator(const FastGenerator& gen, std::span<const double> f, std::span<const int> z_C) {
    return gen.apply(f, z_C);
}

double PoissonSolution::F1(std::span<const int> z_C) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < b1.size(); ++i) acc += b1[i] * z_C[i];
    return acc;
}

double PoissonSolution::F2(std::span<const int> z_C) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < b2.size(); ++i) acc += b2[i] * z_C[i];
    return acc;
}

PoissonRhs poisson_rhs(const FastGenerator& gen) {
    const auto& p = gen.params();
    const double zs = gen.z_S();
    const auto avg = averaged_propensities(p, zs);
    const auto& lat = gen.lattice();
    const int r = p.r();
    PoissonRhs rhs;
    rhs.h1.resize(lat.size());
    rhs.h2.resize(lat.size());
    for (std::size_t s = 0; s < lat.size(); ++s) {
        const auto u = lat.state(s);
        int bound = 0;
        for (int c : u) bound += c;
        const double bind = p.forward(1) * zs * (p.J() - bound) - avg.binding;
        const double unbind = p.backward(1) * u[0] - avg.unbinding;
        const double release = p.product() * u[static_cast<std::size_t>(r - 1)] - avg.product;
        rhs.h1[s] = unbind - bind;
        rhs.h2[s] = release;
    }
    return rhs;
}

DenseMatrix poisson_coefficient_matrix(const CascadeParams& p, double z_S) {
    const int r = p.r();
    const double bind = p.forward(1) * z_S;
    DenseMatrix K(static_cast<std::size_t>(r));
    auto k = [&](int row, int col) -> double& {
        return K(static_cast<std::size_t>(row - 1), static_cast<std::size_t>(col - 1));
    };
    // Every z_i coefficient carries -kappa_1 z_S b_1 from the binding term.
    for (int i = 1; i <= r; ++i) k(i, 1) -= bind;
    k(1, 1) -= p.backward(1);
    for (int i = 1; i < r; ++i) {
        // C_i -> C_{i+1}: kappa_{i+1} z_i (b_{i+1} - b_i)
        k(i, i + 1) += p.forward(i + 1);
        k(i, i) -= p.forward(i + 1);
        // C_{i+1} -> C_i: kappa_{-(i+1)} z_{i+1} (b_i - b_{i+1})
        k(i + 1, i) += p.backward(i + 1);
        k(i + 1, i + 1) -= p.backward(i + 1);
    }
    k(r, r) -= p.product();
    return K;
}

PoissonSolution solve_poisson(const CascadeParams& params, double z_S) {
    const FastGenerator gen(params, z_S);
    const int r = params.r();

    // z_i-coefficients of h1 = lambda_bar_-1 - lambda_bar_1 and h2 = lambda_bar_P.
    std::vector<double> c1(static_cast<std::size_t>(r), params.forward(1) * z_S);
    c1[0] += params.backward(1);
    std::vector<double> c2(static_cast<std::size_t>(r), 0.0);
    c2.back() = params.product();
    for (auto& v : c1) v = -v;
    for (auto& v : c2) v = -v;

    const auto K = poisson_coefficient_matrix(params, z_S);
    PoissonSolution sol;
    sol.z_S = z_S;
    sol.b1 = solve_dense(K, c1);
    sol.b2 = solve_dense(K, c2);

    const auto rhs = poisson_rhs(gen);
    const auto& lat = gen.lattice();
    std::vector<double> f1(lat.size()), f2(lat.size());
    for (std::size_t s = 0; s < lat.size(); ++s) {
        f1[s] = sol.F1(lat.state(s));
        f2[s] = sol.F2(lat.state(s));
    }
    const auto bf1 = gen.apply_all(f1);
    const auto bf2 = gen.apply_all(f2);
    double h_inf = 0.0, res = 0.0;
    for (std::size_t s = 0; s < lat.size(); ++s) {
        h_inf = std::max({h_inf, std::abs(rhs.h1[s]), std::abs(rhs.h2[s])});
        res = std::max({res, std::abs(bf1[s] + rhs.h1[s]), std::abs(bf2[s] + rhs.h2[s])});
    }
    sol.residual_max = res;
    sol.residual_tolerance = 1e-8 * std::max(1.0, h_inf);
    if (!(res <= sol.residual_tolerance)) {
        std::ostringstream msg;
        msg << "Poisson solution failed its residual certificate at z_S = " << z_S
            << " (max |B F + h| = " << res << ", tolerance " << sol.residual_tolerance << ")";
        throw NumericalError(msg.str());
    }
    sol.certified = true;
    return sol;
}

}  // namespace cascade
