#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"
#include "lifelog/simd/kernels.hpp"

#if defined(LIFELOG_HAVE_NEON) && defined(__linux__)
#include <asm/hwcap.h>
#include <sys/auxv.h>
#endif

namespace lifelog::simd {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, "scalar", &detail::dot_scalar, &detail::dot_rows_scalar};
#if defined(LIFELOG_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, "avx2", &detail::dot_avx2, &detail::dot_rows_avx2};
#endif
#if defined(LIFELOG_HAVE_NEON)
constexpr KernelTable kNeon{Isa::Neon, "neon", &detail::dot_neon, &detail::dot_rows_neon};
#endif

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(LIFELOG_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(LIFELOG_HAVE_NEON)
#if defined(__aarch64__)
            return true;  // Advanced SIMD is mandatory on AArch64.
#elif defined(__linux__) && defined(HWCAP_NEON)
            return (getauxval(AT_HWCAP) & HWCAP_NEON) != 0;
#else
            return false;
#endif
#else
            return false;
#endif
    }
    return false;
}

const KernelTable* table_ptr(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return &kScalar;
        case Isa::Avx2:
#if defined(LIFELOG_HAVE_AVX2)
            return &kAvx2;
#else
            return nullptr;
#endif
        case Isa::Neon:
#if defined(LIFELOG_HAVE_NEON)
            return &kNeon;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable* pick_default() {
    if (const char* forced = std::getenv("LIFELOG_SIMD"); forced != nullptr && *forced != '\0') {
        return &kernels_for(parse_isa(forced));
    }
    const auto isas = supported_isas();
    return &kernels_for(isas.back());
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::vector<Isa> supported_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Neon, Isa::Avx2}) {
        if (table_ptr(isa) != nullptr && cpu_supports(isa)) out.push_back(isa);
    }
    return out;
}

const KernelTable& kernels_for(Isa isa) {
    const KernelTable* table = table_ptr(isa);
    if (table == nullptr || !cpu_supports(isa)) {
        throw std::invalid_argument("SIMD variant '" + std::string(isa_name(isa)) +
                                    "' is not available on this build/CPU");
    }
    return *table;
}

const KernelTable& active_kernels() {
    const KernelTable* current = g_active.load(std::memory_order_acquire);
    if (current == nullptr) {
        const KernelTable* chosen = pick_default();
        g_active.compare_exchange_strong(current, chosen, std::memory_order_acq_rel);
        current = g_active.load(std::memory_order_acquire);
    }
    return *current;
}

void select_isa(Isa isa) {
    g_active.store(&kernels_for(isa), std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return "scalar";
        case Isa::Avx2:
            return "avx2";
        case Isa::Neon:
            return "neon";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    if (name == "neon") return Isa::Neon;
    throw std::invalid_argument("unknown SIMD variant '" + std::string(name) + "'");
}

float dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot: length mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
    return active_kernels().dot(a.data(), b.data(), a.size());
}

void dot_rows(std::span<const float> query, std::span<const float> rows, std::size_t dim,
              std::span<float> out) {
    if (query.size() != dim) throw std::invalid_argument("dot_rows: query length != dim");
    if (dim == 0 ? !rows.empty() : rows.size() % dim != 0) {
        throw std::invalid_argument("dot_rows: matrix size is not a multiple of dim");
    }
    const std::size_t count = dim == 0 ? out.size() : rows.size() / dim;
    if (out.size() != count) throw std::invalid_argument("dot_rows: output length != row count");
    active_kernels().dot_rows(query.data(), rows.data(), count, dim, out.data());
}

}  // namespace lifelog::simd
