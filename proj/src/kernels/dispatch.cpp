#include <cstdlib>
#include <cstring>

#include "cascade/kernels.hpp"

namespace cascade::kernels {

bool avx2_supported() {
#if defined(CASCADE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Isa active_isa() {
    static const Isa isa = [] {
        const char* forced = std::getenv("CASCADE_SIMD");
        if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return Isa::scalar;
        return avx2_supported() ? Isa::avx2 : Isa::scalar;
    }();
    return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void gaussian_sum(std::span<const double> centres, double inv_bandwidth, std::span<const double> x,
                  std::span<double> out) {
#ifdef CASCADE_HAVE_AVX2
    if (active_isa() == Isa::avx2) return avx2::gaussian_sum(centres, inv_bandwidth, x, out);
#endif
    scalar::gaussian_sum(centres, inv_bandwidth, x, out);
}

void em_step(const EmCoefficients& c, std::span<double> u_s, std::span<double> u_p,
             std::span<const double> xi1, std::span<const double> xi2) {
#ifdef CASCADE_HAVE_AVX2
    if (active_isa() == Isa::avx2) return avx2::em_step(c, u_s, u_p, xi1, xi2);
#endif
    scalar::em_step(c, u_s, u_p, xi1, xi2);
}

}  // namespace cascade::kernels
