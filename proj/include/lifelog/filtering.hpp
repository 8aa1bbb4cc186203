#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lifelog/clients.hpp"
#include "lifelog/corpus.hpp"
#include "lifelog/vector_store.hpp"

namespace lifelog {

class EmbeddingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unit-length copy of `v`. Throws EmbeddingError for empty, zero or
/// non-finite input.
std::vector<float> normalized(std::span<const float> v);

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws EmbeddingError on a
/// dimension mismatch or a zero vector.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct FrameEmbedding {
    FrameId frame;
    std::vector<float> vector;  // unit length
};

struct EmbedFramesResult {
    std::vector<FrameEmbedding> embeddings;  // input order, skipped frames omitted
    std::vector<std::string> warnings;
};

/// One normalized embedding per readable frame. Unreadable images (and
/// transport failures after retries) are skipped with a warning; a zero raw
/// vector or a dimension different from client.dimension() throws
/// EmbeddingError.
EmbedFramesResult embed_frames(VisionEmbedderClient& client, const Corpus& corpus,
                               std::span<const Frame> frames, const RetryPolicy& retry = {},
                               std::size_t parallelism = 1);

VectorStore to_vector_store(std::span<const FrameEmbedding> embeddings);

inline constexpr double kDefaultFilterThreshold = 0.8;

/// Which earlier frame a candidate is compared against.
enum class FilterAnchor {
    LastKept,  // the most recently kept frame (default)
    Previous,  // the immediately preceding input frame
};

/// Near-duplicate removal over one chronological frame sequence. The first
/// frame is kept. A later frame is dropped when its cosine similarity to the
/// anchor is >= threshold, otherwise kept. With FilterAnchor::LastKept a kept
/// frame becomes the new anchor. Frames without an embedding are always kept
/// and compare as dissimilar to their neighbours.
///
/// Throws std::invalid_argument unless 0 <= threshold <= 1.
std::vector<Frame> filter_frames(std::span<const Frame> frames, const VectorStore& embeddings,
                                 double threshold = kDefaultFilterThreshold,
                                 FilterAnchor anchor = FilterAnchor::LastKept);

}  // namespace lifelog
