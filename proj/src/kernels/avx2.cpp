#include <immintrin.h>

#include <cmath>

#include "cascade/kernels.hpp"

namespace cascade::kernels::avx2 {

namespace {

// exp(x) for x <= 0: x = k ln2 + r with |r| <= ln2/2, degree-13 Taylor
// polynomial for exp(r), then scale by 2^k through the exponent bits.
// Arguments below -708 flush to 0.
inline __m256d exp_nonpositive(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    const __m256d lower = _mm256_set1_pd(-708.0);

    const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
    x = _mm256_max_pd(x, lower);
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);

    static constexpr double inv_fact[] = {
        1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0,
        1.0 / 40320.0,      1.0 / 5040.0,      1.0 / 720.0,      1.0 / 120.0,     1.0 / 24.0,
        1.0 / 6.0,          0.5,               1.0,              1.0};
    __m256d p = _mm256_set1_pd(inv_fact[0]);
    for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_fact[i]));

    const __m128i ki = _mm256_cvtpd_epi32(k);
    __m256i bits = _mm256_cvtepi32_epi64(ki);
    bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
    const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    return _mm256_andnot_pd(underflow, result);
}

inline double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void gaussian_sum(std::span<const double> centres, double inv_bandwidth, std::span<const double> x,
                  std::span<double> out) {
    const std::size_t m = centres.size();
    const std::size_t m4 = m - m % 4;
    const __m256d scale = _mm256_set1_pd(inv_bandwidth);
    const __m256d minus_half = _mm256_set1_pd(-0.5);
    for (std::size_t g = 0; g < x.size(); ++g) {
        const __m256d xg = _mm256_set1_pd(x[g]);
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < m4; j += 4) {
            const __m256d d = _mm256_mul_pd(_mm256_sub_pd(xg, _mm256_loadu_pd(centres.data() + j)), scale);
            acc = _mm256_add_pd(acc, exp_nonpositive(_mm256_mul_pd(minus_half, _mm256_mul_pd(d, d))));
        }
        double total = horizontal_sum(acc);
        for (std::size_t j = m4; j < m; ++j) {
            const double d = (x[g] - centres[j]) * inv_bandwidth;
            total += std::exp(-0.5 * d * d);
        }
        out[g] = total;
    }
}

void em_step(const EmCoefficients& c, std::span<double> u_s, std::span<double> u_p,
             std::span<const double> xi1, std::span<const double> xi2) {
    const std::size_t m = u_s.size();
    const std::size_t m4 = m - m % 4;
    const __m256d a11 = _mm256_set1_pd(c.a11_dt);
    const __m256d a21 = _mm256_set1_pd(c.a21_dt);
    const __m256d s11 = _mm256_set1_pd(c.s11);
    const __m256d s12 = _mm256_set1_pd(c.s12);
    const __m256d s22 = _mm256_set1_pd(c.s22);
    for (std::size_t k = 0; k < m4; k += 4) {
        const __m256d s = _mm256_loadu_pd(u_s.data() + k);
        const __m256d p = _mm256_loadu_pd(u_p.data() + k);
        const __m256d n1 = _mm256_loadu_pd(xi1.data() + k);
        const __m256d n2 = _mm256_loadu_pd(xi2.data() + k);
        const __m256d ns = _mm256_add_pd(_mm256_mul_pd(s11, n1), _mm256_mul_pd(s12, n2));
        const __m256d np = _mm256_add_pd(_mm256_mul_pd(s12, n1), _mm256_mul_pd(s22, n2));
        _mm256_storeu_pd(u_s.data() + k, _mm256_add_pd(_mm256_add_pd(s, _mm256_mul_pd(a11, s)), ns));
        _mm256_storeu_pd(u_p.data() + k, _mm256_add_pd(_mm256_add_pd(p, _mm256_mul_pd(a21, s)), np));
    }
    scalar::em_step(c, u_s.subspan(m4), u_p.subspan(m4), xi1.subspan(m4), xi2.subspan(m4));
}

}  // namespace cascade::kernels::avx2
