#include "kernels_impl.hpp"

#include "lifelog/simd/kernels.hpp"

namespace lifelog::simd::detail {

// Lane j accumulates products at indices j, j+8, j+16, ... The lanes are then
// folded as ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)), which is the order a 256-bit
// horizontal add produces. The tail (n % 8) is added sequentially afterwards.
float dot_scalar(const float* a, const float* b, std::size_t n) {
    float lane[kLanes] = {};
    const std::size_t blocked = n - n % kLanes;
    for (std::size_t i = 0; i < blocked; i += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) {
            const float p = a[i + j] * b[i + j];
            lane[j] = lane[j] + p;
        }
    }
    const float s0 = lane[0] + lane[4];
    const float s1 = lane[1] + lane[5];
    const float s2 = lane[2] + lane[6];
    const float s3 = lane[3] + lane[7];
    float sum = (s0 + s2) + (s1 + s3);
    for (std::size_t i = blocked; i < n; ++i) {
        const float p = a[i] * b[i];
        sum = sum + p;
    }
    return sum;
}

void dot_rows_scalar(const float* query, const float* rows, std::size_t count, std::size_t dim,
                     float* out) {
    for (std::size_t r = 0; r < count; ++r) out[r] = dot_scalar(query, rows + r * dim, dim);
}

}  // namespace lifelog::simd::detail
