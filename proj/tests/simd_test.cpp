#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lifelog/simd/kernels.hpp"

namespace lifelog::simd {
namespace {

std::vector<float> random_vector(std::mt19937& rng, std::size_t n) {
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

bool same_bits(float a, float b) {
    std::uint32_t ua, ub;
    std::memcpy(&ua, &a, 4);
    std::memcpy(&ub, &b, 4);
    return ua == ub;
}

TEST(SimdKernels, ScalarIsAlwaysSupportedAndFirst) {
    const auto isas = supported_isas();
    ASSERT_FALSE(isas.empty());
    EXPECT_EQ(isas.front(), Isa::Scalar);
}

TEST(SimdKernels, EveryVariantMatchesScalarBitForBit) {
    std::mt19937 rng(1234);
    const auto& ref = kernels_for(Isa::Scalar);
    for (Isa isa : supported_isas()) {
        const auto& k = kernels_for(isa);
        for (std::size_t n = 0; n <= 67; ++n) {
            // Offset by one float so the wide variants see unaligned input.
            auto a = random_vector(rng, n + 1);
            auto b = random_vector(rng, n + 1);
            const float expect = ref.dot(a.data() + 1, b.data() + 1, n);
            const float got = k.dot(a.data() + 1, b.data() + 1, n);
            EXPECT_TRUE(same_bits(expect, got)) << isa_name(isa) << " n=" << n << " " << expect << " vs " << got;
        }
    }
}

TEST(SimdKernels, DotRowsMatchesScalarBitForBit) {
    std::mt19937 rng(99);
    const auto& ref = kernels_for(Isa::Scalar);
    for (Isa isa : supported_isas()) {
        const auto& k = kernels_for(isa);
        for (std::size_t dim : {1u, 7u, 8u, 16u, 33u, 256u, 1024u}) {
            const std::size_t count = 13;
            auto q = random_vector(rng, dim);
            auto rows = random_vector(rng, dim * count);
            std::vector<float> expect(count), got(count);
            ref.dot_rows(q.data(), rows.data(), count, dim, expect.data());
            k.dot_rows(q.data(), rows.data(), count, dim, got.data());
            for (std::size_t i = 0; i < count; ++i) {
                EXPECT_TRUE(same_bits(expect[i], got[i])) << isa_name(isa) << " dim=" << dim << " row=" << i;
                EXPECT_TRUE(same_bits(got[i], k.dot(q.data(), rows.data() + i * dim, dim)));
            }
        }
    }
}

TEST(SimdKernels, ScalarAgreesWithDoublePrecisionOracle) {
    std::mt19937 rng(7);
    const auto& ref = kernels_for(Isa::Scalar);
    for (std::size_t n : {1u, 5u, 8u, 9u, 64u, 100u, 1000u, 4096u}) {
        auto a = random_vector(rng, n);
        auto b = random_vector(rng, n);
        double exact = 0.0, magnitude = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            exact += static_cast<double>(a[i]) * b[i];
            magnitude += std::abs(static_cast<double>(a[i]) * b[i]);
        }
        // Standard forward error bound for recursive summation in float.
        const double bound = static_cast<double>(n) * 0x1.0p-24 * magnitude * 1.01;
        EXPECT_NEAR(ref.dot(a.data(), b.data(), n), exact, bound) << "n=" << n;
    }
}

TEST(SimdKernels, ExactOnSmallIntegers) {
    std::vector<float> a(37), b(37);
    double expect = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<float>(i % 5);
        b[i] = static_cast<float>(3 - static_cast<int>(i % 7));
        expect += a[i] * b[i];
    }
    for (Isa isa : supported_isas()) EXPECT_EQ(kernels_for(isa).dot(a.data(), b.data(), a.size()), expect);
}

TEST(SimdKernels, SpanDotRejectsLengthMismatch) {
    std::vector<float> a(4, 1.0f), b(5, 1.0f);
    EXPECT_THROW(dot(a, b), std::invalid_argument);
}

TEST(SimdKernels, DotRowsValidatesShapes) {
    std::vector<float> q(4, 1.0f), rows(12, 1.0f), out(3), short_out(2);
    EXPECT_NO_THROW(dot_rows(q, rows, 4, out));
    EXPECT_EQ(out, std::vector<float>(3, 4.0f));
    EXPECT_THROW(dot_rows(q, rows, 4, short_out), std::invalid_argument);
    EXPECT_THROW(dot_rows(q, std::span<const float>(rows).first(10), 4, out), std::invalid_argument);
}

TEST(SimdKernels, SelectIsaSwitchesActiveTable) {
    const Isa before = active_kernels().isa;
    for (Isa isa : supported_isas()) {
        select_isa(isa);
        EXPECT_EQ(active_kernels().isa, isa);
    }
    select_isa(before);
}

TEST(SimdKernels, IsaNamesRoundTrip) {
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) EXPECT_EQ(parse_isa(isa_name(isa)), isa);
    EXPECT_THROW(parse_isa("sse9"), std::invalid_argument);
}

TEST(SimdKernels, UnsupportedVariantIsRejected) {
    const auto isas = supported_isas();
    for (Isa isa : {Isa::Avx2, Isa::Neon}) {
        if (std::find(isas.begin(), isas.end(), isa) == isas.end()) {
            EXPECT_THROW(kernels_for(isa), std::invalid_argument);
        }
    }
}

}  // namespace
}  // namespace lifelog::simd
