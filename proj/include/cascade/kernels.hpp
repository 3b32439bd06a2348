#pragma once

// Hot loops with a scalar reference implementation and an AVX2 variant.
// The variant is picked once at runtime from the CPU's feature flags; setting
// CASCADE_SIMD=scalar in the environment forces the reference path.
//
// em_step is bit-identical across variants (same operation order, no
// contraction). gaussian_sum uses a polynomial exp in the AVX2 path and agrees
// with the scalar std::exp path to a few ulp per term.

#include <cstddef>
#include <span>
#include <string_view>

namespace cascade::kernels {

enum class Isa { scalar, avx2 };

/// Coefficients of one Euler-Maruyama step of the 2-d linear SDE
/// du = A u dt + D^{1/2} dW, with A = [[a11, 0], [a21, 0]] and
/// S = D^{1/2} sqrt(dt) = [[s11, s12], [s12, s22]].
struct EmCoefficients {
    double a11_dt = 0.0;
    double a21_dt = 0.0;
    double s11 = 0.0;
    double s12 = 0.0;
    double s22 = 0.0;
};

namespace scalar {
void gaussian_sum(std::span<const double> centres, double inv_bandwidth, std::span<const double> x,
                  std::span<double> out);
void em_step(const EmCoefficients& c, std::span<double> u_s, std::span<double> u_p,
             std::span<const double> xi1, std::span<const double> xi2);
}  // namespace scalar

namespace avx2 {
void gaussian_sum(std::span<const double> centres, double inv_bandwidth, std::span<const double> x,
                  std::span<double> out);
void em_step(const EmCoefficients& c, std::span<double> u_s, std::span<double> u_p,
             std::span<const double> xi1, std::span<const double> xi2);
}  // namespace avx2

/// True when the AVX2 variant was compiled in and the CPU supports AVX2 and FMA.
bool avx2_supported();
/// Variant used by the dispatching entry points.
Isa active_isa();
std::string_view isa_name(Isa isa);

/// out[g] = sum_j exp(-0.5 * ((x[g] - centres[j]) * inv_bandwidth)^2).
void gaussian_sum(std::span<const double> centres, double inv_bandwidth, std::span<const double> x,
                  std::span<double> out);

/// u <- u + A u dt + S xi, elementwise over replicates.
void em_step(const EmCoefficients& c, std::span<double> u_s, std::span<double> u_p,
             std::span<const double> xi1, std::span<const double> xi2);

}  // namespace cascade::kernels
