#pragma once

// Dense float kernels used by every similarity scan (caption index search,
// frame-embedding cosine, normalization).
//
// Each instruction-set variant accumulates in eight lanes and reduces them with
// the same fixed tree, so all variants return bit-identical results. The
// scalar variant is the reference the others are tested against.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace lifelog::simd {

enum class Isa { Scalar, Avx2, Neon };

/// Width of the accumulator block shared by all variants.
inline constexpr std::size_t kLanes = 8;

struct KernelTable {
    Isa isa;
    const char* name;
    float (*dot)(const float* a, const float* b, std::size_t n);
    /// out[i] = dot(query, rows + i * dim) for i in [0, count).
    void (*dot_rows)(const float* query, const float* rows, std::size_t count, std::size_t dim,
                     float* out);
};

/// Variants compiled into this binary and supported by the running CPU, the
/// scalar reference first.
std::vector<Isa> supported_isas();

/// Table for a specific variant. Throws std::invalid_argument if it is not in
/// supported_isas().
const KernelTable& kernels_for(Isa isa);

/// Currently active table. On first use picks the widest supported variant,
/// unless LIFELOG_SIMD=scalar|avx2|neon names another.
const KernelTable& active_kernels();

/// Overrides the active variant process-wide.
void select_isa(Isa isa);

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

/// Dot product through the active variant. Throws std::invalid_argument on a
/// length mismatch.
float dot(std::span<const float> a, std::span<const float> b);

/// Scores every row of a row-major matrix against `query`.
void dot_rows(std::span<const float> query, std::span<const float> rows, std::size_t dim,
              std::span<float> out);

}  // namespace lifelog::simd
