#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace lifelog::simd::detail {

namespace {

// Two 4-wide accumulators hold lanes 0..3 and 4..7 of the shared 8-lane block.
inline float dot_block(const float* a, const float* b, std::size_t n) {
    float32x4_t lo = vdupq_n_f32(0.0f);
    float32x4_t hi = vdupq_n_f32(0.0f);
    const std::size_t blocked = n - n % 8;
    for (std::size_t i = 0; i < blocked; i += 8) {
        lo = vaddq_f32(lo, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
        hi = vaddq_f32(hi, vmulq_f32(vld1q_f32(a + i + 4), vld1q_f32(b + i + 4)));
    }
    const float32x4_t s = vaddq_f32(lo, hi);
    const float s0 = vgetq_lane_f32(s, 0);
    const float s1 = vgetq_lane_f32(s, 1);
    const float s2 = vgetq_lane_f32(s, 2);
    const float s3 = vgetq_lane_f32(s, 3);
    float sum = (s0 + s2) + (s1 + s3);
    for (std::size_t i = blocked; i < n; ++i) {
        const float p = a[i] * b[i];
        sum = sum + p;
    }
    return sum;
}

}  // namespace

float dot_neon(const float* a, const float* b, std::size_t n) {
    return dot_block(a, b, n);
}

void dot_rows_neon(const float* query, const float* rows, std::size_t count, std::size_t dim,
                   float* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = dot_block(query, rows + r * dim, dim);
}

}  // namespace lifelog::simd::detail
