#pragma once

#include <cstddef>

namespace lifelog::simd::detail {

float dot_scalar(const float* a, const float* b, std::size_t n);
void dot_rows_scalar(const float* query, const float* rows, std::size_t count, std::size_t dim,
                     float* out);

#if defined(LIFELOG_HAVE_AVX2)
float dot_avx2(const float* a, const float* b, std::size_t n);
void dot_rows_avx2(const float* query, const float* rows, std::size_t count, std::size_t dim,
                   float* out);
#endif

#if defined(LIFELOG_HAVE_NEON)
float dot_neon(const float* a, const float* b, std::size_t n);
void dot_rows_neon(const float* query, const float* rows, std::size_t count, std::size_t dim,
                   float* out);
#endif

}  // namespace lifelog::simd::detail
