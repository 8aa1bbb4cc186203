#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fixture.hpp"
#include "lifelog/filtering.hpp"
#include "lifelog/mock_clients.hpp"

namespace lifelog {
namespace {

using testing::TempDir;

std::vector<float> at_degrees(double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    return {static_cast<float>(std::cos(r)), static_cast<float>(std::sin(r))};
}

struct Sequence {
    std::vector<Frame> frames;
    VectorStore store;
};

Sequence make_sequence(const std::vector<std::vector<float>>& vectors, std::set<std::size_t> missing = {}) {
    Sequence s;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        Frame f{FrameId("f" + std::to_string(i)), SegmentId("s"), i,
                Timestamp(static_cast<std::int64_t>(i), 0), "x"};
        if (!missing.contains(i)) s.store.add(f.id.str(), vectors[i]);
        s.frames.push_back(std::move(f));
    }
    return s;
}

std::vector<std::size_t> kept_indices(const Sequence& s, double t, FilterAnchor anchor = FilterAnchor::LastKept) {
    std::vector<std::size_t> out;
    for (const auto& f : filter_frames(s.frames, s.store, t, anchor)) out.push_back(f.index_in_segment);
    return out;
}

using Idx = std::vector<std::size_t>;

TEST(Cosine, BasicProperties) {
    EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<float>{1, 0}, std::vector<float>{0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<float>{4, 3}, std::vector<float>{1, 0}), 0.8);
    EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<float>{2, 0}, std::vector<float>{-5, 0}), -1.0);
    EXPECT_THROW(cosine_similarity(std::vector<float>{0, 0}, std::vector<float>{1, 0}), EmbeddingError);
    EXPECT_THROW(cosine_similarity(std::vector<float>{1}, std::vector<float>{1, 0}), EmbeddingError);
}

TEST(Normalize, UnitLengthAndErrors) {
    const auto v = normalized(std::vector<float>{3, 4});
    EXPECT_FLOAT_EQ(v[0], 0.6f);
    EXPECT_FLOAT_EQ(v[1], 0.8f);
    EXPECT_THROW(normalized(std::vector<float>{}), EmbeddingError);
    EXPECT_THROW(normalized(std::vector<float>{0, 0}), EmbeddingError);
    EXPECT_THROW(normalized(std::vector<float>{NAN, 1}), EmbeddingError);
}

// Angles 0, 10, 20, 50, 55, 120 degrees. Hand trace at t = 0.8 with the
// last kept frame as anchor: 10 and 20 are within cos 0.94 of 0 (dropped), 50
// is at cos 0.64 (kept, new anchor), 55 is at cos 0.996 of 50 (dropped), 120
// is at cos 0.34 of 50 (kept).
TEST(FilterFrames, HandTracedAngles) {
    const auto s = make_sequence({at_degrees(0), at_degrees(10), at_degrees(20), at_degrees(50), at_degrees(55),
                                  at_degrees(120)});
    EXPECT_EQ(kept_indices(s, 0.8), (Idx{0, 3, 5}));
    // At t = 0 only negative cosines survive: 120 vs 0 is -0.5.
    EXPECT_EQ(kept_indices(s, 0.0), (Idx{0, 5}));
    EXPECT_EQ(kept_indices(s, 1.0), (Idx{0, 1, 2, 3, 4, 5}));
}

// Exact duplicates on the axes: e1 e1 e2 e2 e1.
TEST(FilterFrames, HandTracedDuplicates) {
    const std::vector<float> e1{1, 0}, e2{0, 1};
    const auto s = make_sequence({e1, e1, e2, e2, e1});
    EXPECT_EQ(kept_indices(s, 1.0), (Idx{0, 2, 4}));
    EXPECT_EQ(kept_indices(s, 0.8), (Idx{0, 2, 4}));
    EXPECT_EQ(kept_indices(s, 0.0), (Idx{0}));
}

TEST(FilterFrames, ThresholdIsInclusive) {
    // cos((4,3), (1,0)) is exactly 0.8.
    const auto s = make_sequence({{1, 0}, {4, 3}});
    EXPECT_EQ(kept_indices(s, 0.8), (Idx{0}));
    EXPECT_EQ(kept_indices(s, 0.8000001), (Idx{0, 1}));
}

TEST(FilterFrames, AnchorIsLastKeptFrameNotPreviousFrame) {
    // Slow drift: each step is 15 degrees, so neighbours are always similar
    // (cos 0.966) but the drift from the anchor eventually exceeds the
    // threshold.
    const auto s = make_sequence({at_degrees(0), at_degrees(15), at_degrees(30), at_degrees(45), at_degrees(60)});
    EXPECT_EQ(kept_indices(s, 0.8, FilterAnchor::LastKept), (Idx{0, 3}));
    EXPECT_EQ(kept_indices(s, 0.8, FilterAnchor::Previous), (Idx{0}));
}

TEST(FilterFrames, MissingEmbeddingIsKeptAndResetsAnchor) {
    const std::vector<float> e1{1, 0};
    const auto s = make_sequence({e1, e1, e1, e1}, {1});
    EXPECT_EQ(kept_indices(s, 0.8), (Idx{0, 1, 2}));
}

TEST(FilterFrames, EdgeCases) {
    const auto empty = make_sequence({});
    EXPECT_TRUE(kept_indices(empty, 0.8).empty());
    const auto one = make_sequence({{1, 0}});
    EXPECT_EQ(kept_indices(one, 0.0), (Idx{0}));
    EXPECT_THROW(filter_frames(one.frames, one.store, -0.1), std::invalid_argument);
    EXPECT_THROW(filter_frames(one.frames, one.store, 1.5), std::invalid_argument);
    EXPECT_THROW(filter_frames(one.frames, one.store, NAN), std::invalid_argument);
}

// Random sequences in the positive orthant: exact repeats, small
// perturbations and fresh vectors, as in a wearable stream.
Sequence random_positive_sequence(std::mt19937& rng, std::size_t dim) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::normal_distribution<float> jitter(0.0f, 0.08f);
    std::vector<std::vector<float>> vectors;
    const std::size_t n = 5 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> v(dim);
        const double roll = u(rng);
        if (i > 0 && roll < 0.3) {
            v = vectors.back();
        } else if (i > 0 && roll < 0.7) {
            v = vectors.back();
            for (auto& x : v) x = std::max(0.0f, x + jitter(rng));
            if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) v[0] = 1.0f;
        } else {
            for (auto& x : v) x = u(rng);
        }
        vectors.push_back(v);
    }
    return make_sequence(vectors);
}

bool is_subset(const Idx& a, const Idx& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

TEST(FilterFrames, MonotoneOverStandardThresholdsOnRandomSequences) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_positive_sequence(rng, 16);
        const auto k0 = kept_indices(s, 0.0);
        const auto k8 = kept_indices(s, 0.8);
        const auto k10 = kept_indices(s, 1.0);
        EXPECT_EQ(k0, (Idx{0})) << "trial " << trial;
        EXPECT_TRUE(is_subset(k0, k8)) << "trial " << trial;
        EXPECT_TRUE(is_subset(k8, k10)) << "trial " << trial;
    }
}

TEST(FilterFrames, PreviousAnchorIsMonotoneForAnyThresholds) {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_positive_sequence(rng, 8);
        const double lo = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double hi = std::uniform_real_distribution<double>(lo, 1.0)(rng);
        EXPECT_TRUE(is_subset(kept_indices(s, lo, FilterAnchor::Previous), kept_indices(s, hi, FilterAnchor::Previous)));
    }
}

// With the last kept frame as anchor, monotonicity can fail between
// arbitrary thresholds: at 0.8 the 30-degree frame is dropped and the
// 50-degree frame kept; at 0.9 it is the other way round.
TEST(FilterFrames, LastKeptAnchorIsNotMonotoneForArbitraryThresholds) {
    const auto s = make_sequence({at_degrees(0), at_degrees(30), at_degrees(50)});
    EXPECT_EQ(kept_indices(s, 0.8), (Idx{0, 2}));
    EXPECT_EQ(kept_indices(s, 0.9), (Idx{0, 1}));
}

TEST(EmbedFrames, SkipsUnreadableImagesWithWarning) {
    TempDir dir;
    const auto corpus = ingest_manifest(testing::write_synthetic_corpus(dir.path(), {{"a", "a", "b"}})).corpus;
    std::filesystem::remove(dir / "images/d0_0001.txt");
    MockVisionEmbedder client;
    const auto result = embed_frames(client, corpus, corpus.frames(), RetryPolicy::no_wait(), 2);
    ASSERT_EQ(result.embeddings.size(), 2u);
    EXPECT_EQ(result.embeddings[0].frame, FrameId("d0_0000"));
    EXPECT_EQ(result.embeddings[1].frame, FrameId("d0_0002"));
    ASSERT_EQ(result.warnings.size(), 1u);
    EXPECT_NE(result.warnings[0].find("d0_0001"), std::string::npos);
    for (const auto& e : result.embeddings) {
        double n = 0;
        for (float x : e.vector) n += x * x;
        EXPECT_NEAR(n, 1.0, 1e-5);
    }
}

TEST(EmbedFrames, RejectsZeroAndWrongDimensionVectors) {
    TempDir dir;
    const auto corpus = ingest_manifest(testing::write_synthetic_corpus(dir.path(), {{"a", "b"}})).corpus;
    TableVisionEmbedder zero({{FrameId("d0_0000"), {1, 0}}, {FrameId("d0_0001"), {0, 0}}});
    EXPECT_THROW(embed_frames(zero, corpus, corpus.frames()), EmbeddingError);

    struct Liar final : VisionEmbedderClient {
        std::vector<float> embed_image(const ImageRef&) override { return {1, 2, 3}; }
        std::size_t dimension() const override { return 2; }
        std::string model_name() const override { return "liar"; }
    } liar;
    EXPECT_THROW(embed_frames(liar, corpus, corpus.frames()), EmbeddingError);
}

TEST(EmbedFrames, FilterEndToEndOnMockScenes) {
    TempDir dir;
    const auto corpus = ingest_manifest(testing::write_synthetic_corpus(
                                            dir.path(), {{"kitchen", "kitchen", "kitchen", "street", "street", "kitchen"}}))
                            .corpus;
    MockVisionEmbedder client;
    const auto store = to_vector_store(embed_frames(client, corpus, corpus.frames()).embeddings);
    std::vector<std::string> kept;
    for (const auto& f : filter_frames(corpus.frames(), store)) kept.push_back(f.id.str());
    EXPECT_EQ(kept, (std::vector<std::string>{"d0_0000", "d0_0003", "d0_0005"}));
}

TEST(VectorStore, BinaryAndJsonlRoundTrip) {
    TempDir dir;
    VectorStore s;
    s.add("a", std::vector<float>{1.5f, -2.0f, 0.0f});
    s.add("b", std::vector<float>{1e-30f, 3.25f, -0.0f});
    s.save(dir / "s.vemb");
    s.save_jsonl(dir / "s.jsonl");
    EXPECT_EQ(VectorStore::load(dir / "s.vemb"), s);
    EXPECT_EQ(VectorStore::load(dir / "s.jsonl"), s);
}

TEST(VectorStore, BinaryLayoutIsLittleEndian) {
    TempDir dir;
    VectorStore s;
    s.add("ab", std::vector<float>{1.0f});
    s.save(dir / "s.vemb");
    const auto bytes = testing::read_file(dir / "s.vemb");
    const std::string expect("VEMB\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00"
                             "\x02\x00\x00\x00"
                             "ab\x00\x00\x80\x3f",
                             4 + 4 + 4 + 8 + 4 + 2 + 4);
    EXPECT_EQ(bytes, expect);
}

TEST(VectorStore, RejectsBadInput) {
    VectorStore s;
    s.add("a", std::vector<float>{1, 2});
    EXPECT_THROW(s.add("a", std::vector<float>{1, 2}), VectorStoreError);
    EXPECT_THROW(s.add("b", std::vector<float>{1}), VectorStoreError);
    EXPECT_THROW(s.add("c", std::vector<float>{1, INFINITY}), VectorStoreError);

    TempDir dir;
    s.save(dir / "s.vemb");
    auto bytes = testing::read_file(dir / "s.vemb");
    testing::write_file(dir / "trunc.vemb", bytes.substr(0, bytes.size() - 2));
    EXPECT_THROW(VectorStore::load(dir / "trunc.vemb"), VectorStoreError);
    testing::write_file(dir / "trail.vemb", bytes + "x");
    EXPECT_THROW(VectorStore::load(dir / "trail.vemb"), VectorStoreError);
    testing::write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\"}\n");
    try {
        VectorStore::load(dir / "bad.jsonl");
        FAIL();
    } catch (const VectorStoreError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_THROW(VectorStore::load(dir / "none"), VectorStoreError);
}

}  // namespace
}  // namespace lifelog
