#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "cascade/kernels.hpp"
#include "doctest.h"

using namespace cascade;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("scalar gaussian sum against a direct loop") {
    const auto c = normals(37, 1);
    const std::vector<double> x{-3.0, -0.5, 0.0, 0.25, 2.0};
    std::vector<double> out(x.size());
    kernels::scalar::gaussian_sum(c, 2.0, x, out);
    for (std::size_t g = 0; g < x.size(); ++g) {
        double acc = 0.0;
        for (double cj : c) acc += std::exp(-0.5 * std::pow((x[g] - cj) * 2.0, 2));
        CHECK(out[g] == doctest::Approx(acc).epsilon(1e-14));
    }
}

TEST_CASE("avx2 variants match the scalar reference") {
    if (!kernels::avx2_supported()) {
        MESSAGE("AVX2 not available; scalar path only");
        return;
    }
    for (std::size_t m : {1u, 3u, 4u, 5u, 17u, 1000u}) {
        const auto c = normals(m, m);
        for (double inv_bw : {0.01, 1.0, 7.5, 60.0}) {
            std::vector<double> x;
            for (int g = -40; g <= 40; ++g) x.push_back(0.11 * g);
            x.push_back(1e3);
            std::vector<double> a(x.size()), b(x.size());
            kernels::scalar::gaussian_sum(c, inv_bw, x, a);
            kernels::avx2::gaussian_sum(c, inv_bw, x, b);
            for (std::size_t g = 0; g < x.size(); ++g) {
                CHECK(std::abs(a[g] - b[g]) <= 1e-13 * std::max(a[g], 1e-300) + 1e-300);
            }
        }
    }

    for (std::size_t m : {1u, 2u, 4u, 7u, 256u, 1001u}) {
        const kernels::EmCoefficients co{-0.013, 0.013, 0.21, -0.04, 0.09};
        auto us1 = normals(m, 5), up1 = normals(m, 6);
        auto us2 = us1, up2 = up1;
        const auto xi1 = normals(m, 7), xi2 = normals(m, 8);
        for (int step = 0; step < 50; ++step) {
            kernels::scalar::em_step(co, us1, up1, xi1, xi2);
            kernels::avx2::em_step(co, us2, up2, xi1, xi2);
        }
        CHECK(us1 == us2);
        CHECK(up1 == up2);
    }
}

TEST_CASE("em step arithmetic") {
    const kernels::EmCoefficients co{-0.5, 0.5, 2.0, 1.0, 3.0};
    std::vector<double> us{1.0}, up{2.0};
    const std::vector<double> xi1{0.5}, xi2{-1.0};
    kernels::em_step(co, us, up, xi1, xi2);
    CHECK(us[0] == doctest::Approx(1.0 - 0.5 + (2.0 * 0.5 + 1.0 * -1.0)));
    CHECK(up[0] == doctest::Approx(2.0 + 0.5 + (1.0 * 0.5 + 3.0 * -1.0)));
}

TEST_CASE("dispatch honours the override") {
    const auto isa = kernels::active_isa();
    if (const char* env = std::getenv("CASCADE_SIMD"); env && std::string_view(env) == "scalar")
        CHECK(isa == kernels::Isa::scalar);
    else
        CHECK(isa == (kernels::avx2_supported() ? kernels::Isa::avx2 : kernels::Isa::scalar));
    CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
    CHECK(kernels::isa_name(kernels::Isa::avx2) == "avx2");
}
