#pragma once

// Hand-built corpora and caption indices with exact, chosen scores against a
// fixed two-dimensional query.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lifelog/textindex.hpp"

namespace lifelog::testing {

/// One segment "day" of n frames "f0".."f<n-1>", one minute apart.
inline Corpus line_corpus(std::size_t n) {
    VideoSegment seg{SegmentId("day"), {}};
    std::vector<Frame> frames;
    for (std::size_t i = 0; i < n; ++i) {
        Frame f;
        f.id = FrameId("f" + std::to_string(i));
        f.segment = seg.id;
        f.index_in_segment = i;
        f.timestamp = Timestamp(1000 + static_cast<std::int64_t>(i), 60);
        f.image_path = "images/" + f.id.str() + ".txt";
        seg.frames.push_back(f.id);
        frames.push_back(f);
    }
    return Corpus("/nonexistent", {seg}, frames);
}

struct Planted {
    std::string id;
    double score;
    std::vector<std::string> frames;
};

inline const std::vector<float> kPlantedQuery{1.0F, 0.0F};

/// Captions whose dot product with kPlantedQuery is `score`.
inline CaptionIndex planted_index(const std::vector<Planted>& plants, const Corpus& corpus) {
    CaptionIndex index("planted", 2);
    for (const auto& p : plants) {
        Caption c;
        c.id = CaptionId(p.id);
        c.text = "caption " + p.id;
        c.granularity = p.frames.size() == 1 ? CaptionGranularity::Single : CaptionGranularity::Collective;
        std::optional<Timestamp> earliest;
        for (const auto& f : p.frames) {
            c.frame_ids.emplace_back(f);
            const auto t = corpus.frame(FrameId(f)).timestamp;
            if (!earliest || t < *earliest) earliest = t;
        }
        c.model = "m";
        c.generated_at = "t";
        const float s = static_cast<float>(p.score);
        const std::vector<float> v{s, std::sqrt(1.0F - s * s)};
        index.add(c, v, earliest);
    }
    return index;
}

}  // namespace lifelog::testing
