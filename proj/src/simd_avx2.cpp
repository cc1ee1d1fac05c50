#include "qcurv/simd.hpp"

#include <stdexcept>

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

namespace qcurv::simd {

namespace {

// log(x) for normal positive doubles: x = 2^e * m with m in [sqrt(1/2), sqrt(2)),
// log(m) = 2 atanh(z), z = (m-1)/(m+1); the z^2 series is truncated where the
// next term falls below 1e-18 relative (|z| <= 0.1716).
__attribute__((target("avx2,fma"))) inline __m256d vlog4(__m256d x) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
    const __m256i int_magic = _mm256_set1_epi64x(0x4330000000000000LL);

    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i biased_exp = _mm256_srli_epi64(bits, 52);
    __m256d m = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));  // [1, 2)
    // biased exponent to double via the 2^52 shifter trick (no epi64->pd in AVX2)
    __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(biased_exp, int_magic)),
                              _mm256_set1_pd(4503599627370496.0 + 1023.0));

    const __m256d gt = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), gt);
    e = _mm256_add_pd(e, _mm256_and_pd(gt, one));

    const __m256d z = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d z2 = _mm256_mul_pd(z, z);

    __m256d p = _mm256_set1_pd(1.0 / 21.0);
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 19.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 17.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 15.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 13.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 11.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 9.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 7.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 5.0));
    p = _mm256_fmadd_pd(p, z2, _mm256_set1_pd(1.0 / 3.0));
    p = _mm256_fmadd_pd(p, z2, one);
    const __m256d logm = _mm256_mul_pd(_mm256_add_pd(z, z), p);

    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    const __m256d t = _mm256_fmadd_pd(e, ln2_lo, logm);
    return _mm256_fmadd_pd(e, ln2_hi, t);
}

__attribute__((target("avx2,fma"))) inline double hsum_fixed(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

} // namespace

__attribute__((target("avx2,fma")))
double log_quad_sum_avx2(double a, double b, const double* u, const double* w, std::size_t m) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const __m256d arg = _mm256_fnmadd_pd(vb, _mm256_loadu_pd(u + i), va);  // a - b*u
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), vlog4(arg), acc);
    }
    double sum = hsum_fixed(acc);
    if (i < m) {
        // tail through the same vector log, one lane at a time
        for (; i < m; ++i) {
            const __m256d arg = _mm256_set1_pd(a - b * u[i]);
            alignas(32) double lane[4];
            _mm256_store_pd(lane, vlog4(arg));
            sum += w[i] * lane[0];
        }
    }
    return sum;
}

__attribute__((target("avx2,fma")))
double log_sum_avx2(const double* x, const double* w, std::size_t m) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), vlog4(_mm256_loadu_pd(x + i)), acc);
    double sum = hsum_fixed(acc);
    for (; i < m; ++i) {
        alignas(32) double lane[4];
        _mm256_store_pd(lane, vlog4(_mm256_set1_pd(x[i])));
        sum += w[i] * lane[0];
    }
    return sum;
}

__attribute__((target("avx2,fma")))
double dot_avx2(const double* x, const double* y, std::size_t m) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= m; i += 16) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
        a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
        a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
    }
    for (; i + 4 <= m; i += 4)
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    double sum = hsum_fixed(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
    for (; i < m; ++i) sum += x[i] * y[i];
    return sum;
}

__attribute__((target("avx2,fma")))
void matvec_avx2(const double* A, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(A + r * cols, x, cols);
}

} // namespace qcurv::simd

#else // non-x86: AVX2 entry points must never be reached

namespace qcurv::simd {

double log_quad_sum_avx2(double, double, const double*, const double*, std::size_t) {
    throw std::logic_error("AVX2 kernels unavailable on this architecture");
}
double log_sum_avx2(const double*, const double*, std::size_t) {
    throw std::logic_error("AVX2 kernels unavailable on this architecture");
}
double dot_avx2(const double*, const double*, std::size_t) {
    throw std::logic_error("AVX2 kernels unavailable on this architecture");
}
void matvec_avx2(const double*, const double*, double*, std::size_t, std::size_t) {
    throw std::logic_error("AVX2 kernels unavailable on this architecture");
}

} // namespace qcurv::simd

#endif
