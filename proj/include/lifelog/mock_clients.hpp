#pragma once

// Deterministic stand-ins for the model services, used by tests and by the
// CLI's `mock` backend.
//
// Mock images are plain text files whose first line names the scene
// ("driving a car on a motorway"). Everything a mock produces is a function
// of that scene text, the file bytes and the seed, so runs are reproducible.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "lifelog/clients.hpp"

namespace lifelog {

/// First line of a mock image file, trimmed. Binary or empty files fall back
/// to the file stem. Throws ImageReadError if the file cannot be opened.
std::string read_scene(const std::filesystem::path& image);

class MockCaptioner final : public CaptionerClient {
public:
    explicit MockCaptioner(std::uint64_t seed = 7, CaptionerCapabilities caps = {true, true, true});

    std::string describe_image(const std::string& prompt, const ImageRef& image) override;
    std::string describe_frames(const std::string& prompt, std::span<const ImageRef> images,
                                ResponseFormat format) override;
    CaptionerCapabilities capabilities() const override { return caps_; }
    std::string model_name() const override { return "mock-captioner"; }

    /// Every call touching this frame throws TransportError.
    void fail_frame(const FrameId& frame);
    /// The next `count` calls touching this frame throw TransportError.
    void fail_frame_transiently(const FrameId& frame, int count);
    /// The next `count` JSON answers are not parseable.
    void return_malformed(int count);
    /// Wrap JSON answers in a Markdown code fence.
    void set_fenced(bool fenced) { fenced_ = fenced; }

    std::vector<std::string> prompts() const;
    std::size_t calls() const;

private:
    void check_failures(std::span<const ImageRef> images);
    std::string filler(const std::string& key, std::size_t words) const;

    std::uint64_t seed_;
    CaptionerCapabilities caps_;
    bool fenced_ = false;
    mutable std::mutex mu_;
    std::set<FrameId> failing_;
    std::map<FrameId, int> transient_;
    int malformed_ = 0;
    std::vector<std::string> prompts_;
};

/// Hashed bag-of-words embedder: each token contributes a seeded Gaussian
/// direction, so texts sharing words have high cosine similarity.
class MockTextEmbedder final : public TextEmbedderClient {
public:
    explicit MockTextEmbedder(std::size_t dimension = 256, std::uint64_t seed = 11);

    std::vector<float> embed_text(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }
    std::string model_name() const override { return "mock-text-embedder"; }

    /// Embedding this exact text throws TransportError.
    void fail_text(const std::string& text);
    /// Texts received so far, in call order.
    std::vector<std::string> received() const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    mutable std::mutex mu_;
    std::set<std::string> failing_;
    std::vector<std::string> received_;
};

/// Embeds the scene line plus a small contribution from the raw file bytes:
/// identical files map to identical vectors, same-scene files to close ones.
class MockVisionEmbedder final : public VisionEmbedderClient {
public:
    explicit MockVisionEmbedder(std::size_t dimension = 64, std::uint64_t seed = 13);

    std::vector<float> embed_image(const ImageRef& image) override;
    std::size_t dimension() const override { return dim_; }
    std::string model_name() const override { return "mock-vision-embedder"; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Returns fixed vectors per frame; unknown frames are unreadable images.
class TableVisionEmbedder final : public VisionEmbedderClient {
public:
    explicit TableVisionEmbedder(std::map<FrameId, std::vector<float>> table);

    std::vector<float> embed_image(const ImageRef& image) override;
    std::size_t dimension() const override { return dim_; }
    std::string model_name() const override { return "table-vision-embedder"; }

private:
    std::map<FrameId, std::vector<float>> table_;
    std::size_t dim_ = 0;
};

/// Keeps the candidate order.
class IdentityReranker final : public RerankerClient {
public:
    std::vector<CaptionId> rerank(const std::string&, std::span<const RerankCandidate> candidates,
                                  std::size_t out_count) override;
    std::string model_name() const override { return "identity-reranker"; }
};

/// Reverses the candidate order.
class ReverseReranker final : public RerankerClient {
public:
    std::vector<CaptionId> rerank(const std::string&, std::span<const RerankCandidate> candidates,
                                  std::size_t out_count) override;
    std::string model_name() const override { return "reverse-reranker"; }
};

/// Returns a fixed answer regardless of input, for contract tests.
class ScriptedReranker final : public RerankerClient {
public:
    explicit ScriptedReranker(std::vector<CaptionId> answer) : answer_(std::move(answer)) {}
    std::vector<CaptionId> rerank(const std::string& topic, std::span<const RerankCandidate> candidates,
                                  std::size_t out_count) override;
    std::string model_name() const override { return "scripted-reranker"; }

    const std::string& last_topic() const { return topic_; }
    std::size_t last_pool_size() const { return pool_size_; }

private:
    std::vector<CaptionId> answer_;
    std::string topic_;
    std::size_t pool_size_ = 0;
};

/// Seeded standard-normal vector keyed by `key`; stable across platforms
/// that share the standard library.
std::vector<float> hashed_gaussian(std::string_view key, std::uint64_t seed, std::size_t dimension);

/// FNV-1a 64.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace lifelog
