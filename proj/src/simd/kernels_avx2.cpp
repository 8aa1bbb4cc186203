// Compiled with -mavx2 -ffp-contract=off; only reached after a CPUID check.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace lifelog::simd::detail {

namespace {

inline float reduce(__m256 acc) {
    const __m128 lo = _mm256_castps256_ps128(acc);
    const __m128 hi = _mm256_extractf128_ps(acc, 1);
    const __m128 s = _mm_add_ps(lo, hi);           // s_j = l_j + l_{j+4}
    const __m128 t = _mm_add_ps(s, _mm_movehl_ps(s, s));  // t0 = s0+s2, t1 = s1+s3
    const __m128 u = _mm_add_ss(t, _mm_shuffle_ps(t, t, 0x55));
    return _mm_cvtss_f32(u);
}

inline float dot_block(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    const std::size_t blocked = n - n % 8;
    for (std::size_t i = 0; i < blocked; i += 8) {
        const __m256 p = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, p);
    }
    float sum = reduce(acc);
    for (std::size_t i = blocked; i < n; ++i) {
        const float p = a[i] * b[i];
        sum = sum + p;
    }
    return sum;
}

}  // namespace

float dot_avx2(const float* a, const float* b, std::size_t n) {
    return dot_block(a, b, n);
}

void dot_rows_avx2(const float* query, const float* rows, std::size_t count, std::size_t dim,
                   float* out) {
    for (std::size_t r = 0; r < count; ++r) {
        const float* row = rows + r * dim;
        if (r + 1 < count) _mm_prefetch(reinterpret_cast<const char*>(row + dim), _MM_HINT_T0);
        out[r] = dot_block(query, row, dim);
    }
}

}  // namespace lifelog::simd::detail
