#include "lifelog/app/engine.hpp"

#include <algorithm>
#include <future>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lifelog/app/pipeline.hpp"

namespace lifelog::app {

namespace fs = std::filesystem;

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Single: return "single";
        case Method::Collective: return "collective";
        case Method::Fine: return "fine";
        case Method::Coarse: return "coarse";
        case Method::Combination: return "combination";
        case Method::Rerank: return "rerank";
    }
    return "?";
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods{Method::Single, Method::Collective, Method::Fine,
                                             Method::Coarse, Method::Combination, Method::Rerank};
    return methods;
}

std::optional<Method> parse_method(std::string_view name) {
    for (auto m : all_methods()) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

SearchEngine::SearchEngine(PipelineConfig config, std::unique_ptr<TextEmbedderClient> text,
                           std::unique_ptr<RerankerClient> reranker)
    : config_(std::move(config)), text_(std::move(text)), reranker_(std::move(reranker)) {
    const auto corpus_path = config_.paths.corpus();
    if (!fs::exists(corpus_path)) throw StageError("no corpus at " + corpus_path.string() + "; run `ingest` first");
    corpus_ = ingest_manifest(corpus_path).corpus;
    if (!config_.paths.topics.empty()) topics_ = load_topics(config_.paths.topics);

    for (const char* store : {"single", "collective", "merged"}) {
        const auto path = config_.paths.captions(store);
        if (!fs::exists(path)) continue;
        for (auto& c : load_captions(path, &corpus_)) {
            caption_rows_.emplace(c.id, captions_.size());
            captions_.push_back(std::move(c));
        }
    }
    for (std::size_t row = 0; row < captions_.size(); ++row) {
        for (const auto& f : captions_[row].frame_ids) by_frame_[f].push_back(row);
    }
    for (auto& [frame, rows] : by_frame_) {
        std::stable_sort(rows.begin(), rows.end(), [this](std::size_t a, std::size_t b) {
            return captions_[a].granularity < captions_[b].granularity;
        });
    }

    for (const auto& src : channel_sources()) {
        const auto stem = config_.paths.index(src.channel);
        if (!fs::exists(stem.string() + ".json")) continue;
        auto idx = CaptionIndex::load(stem);
        if (idx.dimension() != text_->dimension()) {
            throw StageError(fmt::format("{} index has dimension {}, text embedder produces {}", src.channel,
                                         idx.dimension(), text_->dimension()));
        }
        if (idx.embedder_name() != text_->model_name()) {
            spdlog::warn("{} index was built with '{}', queries use '{}'", src.channel, idx.embedder_name(),
                         text_->model_name());
        }
        indices_.emplace(src.channel, std::move(idx));
    }
}

std::vector<std::string> SearchEngine::loaded_channels() const {
    std::vector<std::string> out;
    for (const auto& src : channel_sources()) {
        if (indices_.contains(src.channel)) out.push_back(src.channel);
    }
    return out;
}

bool SearchEngine::available(Method m) const {
    switch (m) {
        case Method::Combination:
            return indices_.contains(config_.params.combination_a) && indices_.contains(config_.params.combination_b);
        case Method::Rerank:
            return indices_.contains(config_.params.rerank_channel);
        default:
            return indices_.contains(std::string(to_string(m)));
    }
}

const CaptionIndex& SearchEngine::index(const std::string& channel) const {
    auto it = indices_.find(channel);
    if (it == indices_.end()) {
        throw MethodUnavailable("the " + channel + " index is not built; run `embed --target captions`");
    }
    return it->second;
}

const Caption* SearchEngine::caption(const CaptionId& id) const {
    auto it = caption_rows_.find(id);
    return it == caption_rows_.end() ? nullptr : &captions_[it->second];
}

std::vector<const Caption*> SearchEngine::captions_of(const FrameId& frame) const {
    std::vector<const Caption*> out;
    if (auto it = by_frame_.find(frame); it != by_frame_.end()) {
        for (auto row : it->second) out.push_back(&captions_[row]);
    }
    return out;
}

SearchResult SearchEngine::search(std::string_view query, Method method, std::size_t k, std::string topic,
                                  std::string_view description) const {
    if (k == 0) throw std::invalid_argument("k must be positive");
    const auto name = std::string(to_string(method));
    const auto& p = config_.params;
    // Resolve indices before paying for the query embedding.
    const CaptionIndex* a = nullptr;
    const CaptionIndex* b = nullptr;
    switch (method) {
        case Method::Combination:
            a = &index(p.combination_a);
            b = &index(p.combination_b);
            break;
        case Method::Rerank:
            a = &index(p.rerank_channel);
            break;
        default:
            a = &index(name);
    }
    const auto q = embed_query(*text_, query, p.query_prefix);

    SearchResult result;
    if (method == Method::Combination) {
        auto fa = std::async(std::launch::async, [&] { return frame_scores(*a, q, p.combination_a); });
        auto sb = frame_scores(*b, q, p.combination_b);
        const auto combined = combine_channels(fa.get(), sb, p.fusion_weight);
        result.run = retrieve_topk(combined, k, corpus_, std::move(topic), name);
    } else if (method == Method::Rerank) {
        auto rr = rerank_llm(*reranker_, *a, q, description.empty() ? std::string(query) : std::string(description),
                             corpus_, std::max(p.rerank_pool, k), k, std::move(topic), name);
        result.run = std::move(rr.run);
        result.warnings = std::move(rr.warnings);
    } else {
        result.run = retrieve_topk(frame_scores(*a, q, name), k, corpus_, std::move(topic), name);
    }
    return result;
}

std::vector<SearchResult> SearchEngine::run_topics(std::span<const Topic> topics, Method method) const {
    std::vector<SearchResult> out;
    out.reserve(topics.size());
    for (const auto& t : topics) {
        const auto& text = t.description.empty() ? t.title : t.description;
        out.push_back(search(text, method, t.k_override.value_or(config_.params.k), t.id, t.description));
    }
    return out;
}

}  // namespace lifelog::app
