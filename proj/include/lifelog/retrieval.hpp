#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lifelog/clients.hpp"
#include "lifelog/corpus.hpp"
#include "lifelog/eval.hpp"
#include "lifelog/run.hpp"
#include "lifelog/textindex.hpp"

namespace lifelog {

struct ChannelScore {
    double score = 0.0;
    std::vector<CaptionId> provenance;

    friend bool operator==(const ChannelScore&, const ChannelScore&) = default;
};

/// One caption channel's scores, lifted from captions to frames.
struct FrameScoreMap {
    std::string channel;
    std::map<FrameId, ChannelScore> scores;

    friend bool operator==(const FrameScoreMap&, const FrameScoreMap&) = default;
};

/// Gives every frame of every caption that caption's score. A frame covered
/// by several captions keeps the best one; on equal scores the caption that
/// ranks first in CaptionIndex::search wins.
FrameScoreMap frame_scores(const CaptionIndex& index, std::span<const float> query, std::string channel);

/// Best k frames by score; ties go to the earlier frame, then the smaller id.
/// Frames must exist in `corpus`.
RetrievalRun retrieve_topk(const FrameScoreMap& scores, std::size_t k, const Corpus& corpus,
                           std::string topic = {}, std::string method = {});

/// Frame-level fusion over frames present in both channels:
/// weight * a + (1 - weight) * b. Provenance lists a's captions then b's.
/// Throws std::invalid_argument unless 0 <= weight <= 1.
FrameScoreMap combine_channels(const FrameScoreMap& a, const FrameScoreMap& b, double weight = 0.5);

struct Replacement {
    FrameId frame;
    std::optional<std::size_t> channel_a_rank;  // 1-based; empty if channel A never ranked it
    std::size_t combined_rank = 0;               // 1-based
    bool relevant = false;

    friend bool operator==(const Replacement&, const Replacement&) = default;
};

struct ReplacementEffects {
    std::size_t positive = 0;
    std::size_t negative = 0;
    std::vector<Replacement> details;  // combined rank order
};

/// Frames in the combined top-k that are outside channel A's top-k. Pass
/// channel A's run at full depth so the details can report its rank.
/// Throws std::invalid_argument when the runs are for different topics.
ReplacementEffects replacement_effects(const RetrievalRun& channel_a, const RetrievalRun& combined,
                                       const Qrels& qrels, std::size_t k);

struct RerankResult {
    RetrievalRun run;
    std::vector<std::string> warnings;
};

/// Retrieves the top `pool_size` captions, lets the reranker choose and order
/// up to `out_k` of them, and expands that order to frames (each caption's
/// frames in chronological order, first occurrence wins) truncated to `out_k`.
/// Ids outside the pool and repeated ids are dropped with a warning. Scores
/// are 1/position of the producing caption in the reranked list.
RerankResult rerank_llm(RerankerClient& client, const CaptionIndex& index, std::span<const float> query,
                        const std::string& topic_description, const Corpus& corpus, std::size_t pool_size = 100,
                        std::size_t out_k = 10, std::string topic = {}, std::string method = "rerank");

}  // namespace lifelog
