#include "lifelog/retrieval.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

namespace lifelog {

namespace {

struct Chronological {
    const Corpus& corpus;
    bool operator()(const FrameId& a, const FrameId& b) const {
        const auto& ta = corpus.frame(a).timestamp;
        const auto& tb = corpus.frame(b).timestamp;
        if (ta != tb) return ta < tb;
        return a < b;
    }
};

}  // namespace

FrameScoreMap frame_scores(const CaptionIndex& index, std::span<const float> query, std::string channel) {
    FrameScoreMap out{std::move(channel), {}};
    for (const auto& ranked : index.search(query, index.size())) {
        const Caption& caption = *index.find(ranked.id);
        for (const auto& frame : caption.frame_ids) {
            auto [it, inserted] = out.scores.try_emplace(frame, ChannelScore{ranked.score, {ranked.id}});
            if (!inserted && ranked.score > it->second.score) it->second = ChannelScore{ranked.score, {ranked.id}};
        }
    }
    return out;
}

RetrievalRun retrieve_topk(const FrameScoreMap& scores, std::size_t k, const Corpus& corpus, std::string topic,
                           std::string method) {
    if (k == 0) throw std::invalid_argument("retrieve_topk: k must be positive");
    struct Entry {
        const FrameId* frame;
        const ChannelScore* score;
        const Timestamp* time;
    };
    std::vector<Entry> entries;
    entries.reserve(scores.scores.size());
    for (const auto& [frame, score] : scores.scores) {
        entries.push_back({&frame, &score, &corpus.frame(frame).timestamp});
    }
    auto better = [](const Entry& a, const Entry& b) {
        if (a.score->score != b.score->score) return a.score->score > b.score->score;
        if (*a.time != *b.time) return *a.time < *b.time;
        return *a.frame < *b.frame;
    };
    const auto take = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(take), entries.end(), better);

    RetrievalRun run{std::move(topic), method.empty() ? scores.channel : std::move(method), {}, k};
    run.frames.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        run.frames.push_back({*entries[i].frame, entries[i].score->score, entries[i].score->provenance});
    }
    return run;
}

FrameScoreMap combine_channels(const FrameScoreMap& a, const FrameScoreMap& b, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0)) throw std::invalid_argument("combine_channels: weight must lie in [0, 1]");
    FrameScoreMap out{a.channel + "+" + b.channel, {}};
    auto ia = a.scores.begin();
    auto ib = b.scores.begin();
    // Both maps are ordered by frame id, so the intersection is a merge walk.
    while (ia != a.scores.end() && ib != b.scores.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            ChannelScore s;
            s.score = weight == 0.5 ? (ia->second.score + ib->second.score) / 2.0
                                    : weight * ia->second.score + (1.0 - weight) * ib->second.score;
            s.provenance = ia->second.provenance;
            s.provenance.insert(s.provenance.end(), ib->second.provenance.begin(), ib->second.provenance.end());
            out.scores.emplace_hint(out.scores.end(), ia->first, std::move(s));
            ++ia;
            ++ib;
        }
    }
    return out;
}

ReplacementEffects replacement_effects(const RetrievalRun& channel_a, const RetrievalRun& combined,
                                       const Qrels& qrels, std::size_t k) {
    if (channel_a.topic != combined.topic) {
        throw std::invalid_argument("replacement_effects: topic mismatch ('" + channel_a.topic + "' vs '" +
                                    combined.topic + "')");
    }
    if (k == 0) throw std::invalid_argument("replacement_effects: k must be positive");
    std::unordered_map<FrameId, std::size_t> a_rank;
    for (std::size_t i = 0; i < channel_a.frames.size(); ++i) a_rank.try_emplace(channel_a.frames[i].frame, i + 1);

    ReplacementEffects out;
    const auto depth = std::min(k, combined.frames.size());
    for (std::size_t i = 0; i < depth; ++i) {
        const auto& frame = combined.frames[i].frame;
        std::optional<std::size_t> rank;
        if (auto it = a_rank.find(frame); it != a_rank.end()) rank = it->second;
        if (rank && *rank <= k) continue;
        const bool relevant = qrels.cluster_of(combined.topic, frame) != nullptr;
        ++(relevant ? out.positive : out.negative);
        out.details.push_back({frame, rank, i + 1, relevant});
    }
    return out;
}

RerankResult rerank_llm(RerankerClient& client, const CaptionIndex& index, std::span<const float> query,
                        const std::string& topic_description, const Corpus& corpus, std::size_t pool_size,
                        std::size_t out_k, std::string topic, std::string method) {
    if (out_k == 0) throw std::invalid_argument("rerank_llm: out_k must be positive");
    if (pool_size < out_k) throw std::invalid_argument("rerank_llm: pool size must be at least out_k");

    const auto pool = index.search(query, pool_size);
    std::vector<RerankCandidate> candidates;
    candidates.reserve(pool.size());
    std::unordered_set<CaptionId> in_pool;
    for (const auto& r : pool) {
        candidates.push_back({r.id, index.find(r.id)->text});
        in_pool.insert(r.id);
    }

    RerankResult result;
    result.run = RetrievalRun{std::move(topic), std::move(method), {}, out_k};
    const auto answer = client.rerank(topic_description, candidates, out_k);

    std::unordered_set<CaptionId> used;
    std::unordered_set<FrameId> placed;
    std::size_t position = 0;
    for (const auto& id : answer) {
        if (!in_pool.contains(id)) {
            result.warnings.push_back("reranker returned '" + id.str() + "', which is not in the candidate pool");
            continue;
        }
        if (!used.insert(id).second) {
            result.warnings.push_back("reranker returned '" + id.str() + "' more than once");
            continue;
        }
        ++position;
        if (result.run.frames.size() >= out_k) continue;
        auto frames = index.find(id)->frame_ids;
        std::sort(frames.begin(), frames.end(), Chronological{corpus});
        for (const auto& f : frames) {
            if (result.run.frames.size() >= out_k) break;
            if (!placed.insert(f).second) continue;
            result.run.frames.push_back({f, 1.0 / static_cast<double>(position), {id}});
        }
    }
    for (const auto& w : result.warnings) spdlog::warn("{}", w);
    return result;
}

}  // namespace lifelog
