#include <cmath>

#include "cascade/kernels.hpp"

namespace cascade::kernels::scalar {

void gaussian_sum(std::span<const double> centres, double inv_bandwidth, std::span<const double> x,
                  std::span<double> out) {
    for (std::size_t g = 0; g < x.size(); ++g) {
        double acc = 0.0;
        for (double c : centres) {
            const double d = (x[g] - c) * inv_bandwidth;
            acc += std::exp(-0.5 * d * d);
        }
        out[g] = acc;
    }
}

void em_step(const EmCoefficients& c, std::span<double> u_s, std::span<double> u_p,
             std::span<const double> xi1, std::span<const double> xi2) {
    for (std::size_t k = 0; k < u_s.size(); ++k) {
        const double s = u_s[k];
        const double n1 = xi1[k];
        const double n2 = xi2[k];
        u_s[k] = s + c.a11_dt * s + (c.s11 * n1 + c.s12 * n2);
        u_p[k] = u_p[k] + c.a21_dt * s + (c.s12 * n1 + c.s22 * n2);
    }
}

}  // namespace cascade::kernels::scalar
