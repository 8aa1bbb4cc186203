#include "lifelog/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <spdlog/spdlog.h>

#include "../common/parallel.hpp"
#include "lifelog/simd/kernels.hpp"

namespace lifelog {

std::vector<float> normalized(std::span<const float> v) {
    if (v.empty()) throw EmbeddingError("cannot normalize an empty vector");
    for (float x : v) {
        if (!std::isfinite(x)) throw EmbeddingError("cannot normalize a vector with non-finite values");
    }
    const double sq = simd::dot(v, v);
    if (!(sq > 0.0)) throw EmbeddingError("cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(sq);
    std::vector<float> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(),
                   [inv](float x) { return static_cast<float>(x * inv); });
    return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw EmbeddingError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    }
    const double na = simd::dot(a, a);
    const double nb = simd::dot(b, b);
    if (!(na > 0.0) || !(nb > 0.0)) throw EmbeddingError("cosine_similarity: zero vector");
    const double c = static_cast<double>(simd::dot(a, b)) / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

EmbedFramesResult embed_frames(VisionEmbedderClient& client, const Corpus& corpus,
                               std::span<const Frame> frames, const RetryPolicy& retry,
                               std::size_t parallelism) {
    struct Slot {
        std::optional<std::vector<float>> vector;
        std::string warning;
        std::string error;
    };
    std::vector<Slot> slots(frames.size());
    const auto dim = client.dimension();
    detail::parallel_for(frames.size(), parallelism, [&](std::size_t i) {
        const Frame& f = frames[i];
        try {
            auto raw = with_retry(retry, [&] {
                return client.embed_image(ImageRef{f.id, corpus.absolute_image_path(f)});
            });
            if (raw.size() != dim) {
                slots[i].error = "frame '" + f.id.str() + "': embedder returned dimension " +
                                 std::to_string(raw.size()) + ", expected " + std::to_string(dim);
                return;
            }
            slots[i].vector = normalized(raw);
        } catch (const ImageReadError& e) {
            slots[i].warning = "frame '" + f.id.str() + "' skipped, unreadable image: " + e.what();
        } catch (const TransportError& e) {
            slots[i].warning = "frame '" + f.id.str() + "' skipped, transport failure: " + e.what();
        } catch (const EmbeddingError& e) {
            slots[i].error = "frame '" + f.id.str() + "': " + e.what();
        } catch (const std::exception& e) {
            slots[i].error = "frame '" + f.id.str() + "': " + e.what();
        }
    });
    EmbedFramesResult result;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!slots[i].error.empty()) throw EmbeddingError(slots[i].error);
        if (slots[i].vector) {
            result.embeddings.push_back({frames[i].id, std::move(*slots[i].vector)});
        } else {
            spdlog::warn("{}", slots[i].warning);
            result.warnings.push_back(std::move(slots[i].warning));
        }
    }
    return result;
}

VectorStore to_vector_store(std::span<const FrameEmbedding> embeddings) {
    VectorStore store;
    for (const auto& e : embeddings) store.add(e.frame.str(), e.vector);
    return store;
}

std::vector<Frame> filter_frames(std::span<const Frame> frames, const VectorStore& embeddings,
                                 double threshold, FilterAnchor anchor) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("filter_frames: threshold must lie in [0, 1]");
    }
    std::vector<Frame> kept;
    std::optional<std::span<const float>> reference;  // empty: compare as dissimilar
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::optional<std::span<const float>> current;
        if (auto row = embeddings.find(frames[i].id.str())) current = embeddings.row(*row);

        const bool keep = i == 0 || !current || !reference ||
                          cosine_similarity(*reference, *current) < threshold;
        if (keep) kept.push_back(frames[i]);
        if (keep || anchor == FilterAnchor::Previous) reference = current;
    }
    return kept;
}

}  // namespace lifelog
