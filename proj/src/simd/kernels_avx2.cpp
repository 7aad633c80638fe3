#include "bwf/simd/kernels.hpp"

#if defined(BWF_HAVE_AVX2)

#include <immintrin.h>

namespace bwf::simd::detail {

namespace {

void pipe_flows(std::size_t n, const double* resistance, const double* head_difference, double min_gradient,
                double* flow, double* derivative)
{
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    const __m256d gmin = _mm256_set1_pd(min_gradient);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d dh = _mm256_loadu_pd(head_difference + i);
        __m256d r = _mm256_loadu_pd(resistance + i);
        __m256d a = _mm256_andnot_pd(sign_mask, dh);
        __m256d q = _mm256_sqrt_pd(_mm256_div_pd(a, r));
        __m256d g = _mm256_sqrt_pd(_mm256_mul_pd(a, r));
        g = _mm256_add_pd(g, g);
        // scalar reference keeps g when g > gmin, otherwise gmin
        g = _mm256_blendv_pd(gmin, g, _mm256_cmp_pd(g, gmin, _CMP_GT_OQ));
        q = _mm256_or_pd(q, _mm256_and_pd(sign_mask, dh));
        _mm256_storeu_pd(flow + i, q);
        _mm256_storeu_pd(derivative + i, _mm256_div_pd(one, g));
    }
    if (i < n)
        scalar_table().pipe_flows(n - i, resistance + i, head_difference + i, min_gradient, flow + i,
                                  derivative + i);
}

double sum(std::size_t n, const double* x)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    __m128d lo = _mm256_castpd256_pd128(acc);   // s0 s1
    __m128d hi = _mm256_extractf128_pd(acc, 1);  // s2 s3
    __m128d pair = _mm_add_pd(lo, hi);           // s0+s2, s1+s3
    double total = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
    for (; i < n; ++i)
        total += x[i];
    return total;
}

void scale(std::size_t n, double factor, double* x)
{
    const __m256d k = _mm256_set1_pd(factor);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), k));
    for (; i < n; ++i)
        x[i] *= factor;
}

void blend(std::size_t n, double w, const double* a, const double* b, double* out)
{
    const double v = 1.0 - w;
    const __m256d wv = _mm256_set1_pd(w);
    const __m256d vv = _mm256_set1_pd(v);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d lhs = _mm256_mul_pd(wv, _mm256_loadu_pd(a + i));
        __m256d rhs = _mm256_mul_pd(vv, _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(lhs, rhs));
    }
    for (; i < n; ++i)
        out[i] = w * a[i] + v * b[i];
}

void multiply(std::size_t n, const double* factors, double* x)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(factors + i)));
    for (; i < n; ++i)
        x[i] *= factors[i];
}

std::size_t clamp_nonnegative(std::size_t n, double* x)
{
    const __m256d zero = _mm256_setzero_pd();
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        __m256d neg = _mm256_cmp_pd(v, zero, _CMP_LT_OQ);
        int mask = _mm256_movemask_pd(neg);
        if (mask != 0) {
            count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
            _mm256_storeu_pd(x + i, _mm256_blendv_pd(v, zero, neg));
        }
    }
    for (; i < n; ++i) {
        if (x[i] < 0.0) {
            x[i] = 0.0;
            ++count;
        }
    }
    return count;
}

constexpr KernelTable kAvx2{pipe_flows, sum, scale, blend, multiply, clamp_nonnegative};

}  // namespace

const KernelTable* avx2_table()
{
    return &kAvx2;
}

}  // namespace bwf::simd::detail

#else

namespace bwf::simd::detail {

const KernelTable* avx2_table()
{
    return nullptr;
}

}  // namespace bwf::simd::detail

#endif
