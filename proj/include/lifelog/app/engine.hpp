#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lifelog/app/config.hpp"
#include "lifelog/captions.hpp"
#include "lifelog/clients.hpp"
#include "lifelog/corpus.hpp"
#include "lifelog/eval.hpp"
#include "lifelog/retrieval.hpp"
#include "lifelog/textindex.hpp"

namespace lifelog::app {

enum class Method { Single, Collective, Fine, Coarse, Combination, Rerank };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);
const std::vector<Method>& all_methods();

/// The method's artifacts were not built.
class MethodUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SearchResult {
    RetrievalRun run;
    std::vector<std::string> warnings;
};

/// Read-only view over the built artifacts: corpus, caption stores and
/// channel indices. Searches may run concurrently.
class SearchEngine {
public:
    /// Loads whatever has been built; throws StageError when there is no
    /// corpus. Missing indices only make their methods unavailable.
    SearchEngine(PipelineConfig config, std::unique_ptr<TextEmbedderClient> text,
                 std::unique_ptr<RerankerClient> reranker);

    bool available(Method m) const;
    std::vector<std::string> loaded_channels() const;

    /// Ranks frames for `query`. `description` is what the reranker sees
    /// (defaults to the query). Throws std::invalid_argument for an empty
    /// query or k == 0 and MethodUnavailable when the method's indices are
    /// missing.
    SearchResult search(std::string_view query, Method method, std::size_t k, std::string topic = "query",
                        std::string_view description = {}) const;

    /// Runs every topic (description as the query, k_override honoured).
    std::vector<SearchResult> run_topics(std::span<const Topic> topics, Method method) const;

    const Corpus& corpus() const { return corpus_; }
    const PipelineConfig& config() const { return config_; }
    const std::vector<Topic>& topics() const { return topics_; }
    const Caption* caption(const CaptionId& id) const;
    /// Captions from every loaded store that cover the frame, in granularity
    /// order (single, collective, fine, coarse, summary).
    std::vector<const Caption*> captions_of(const FrameId& frame) const;

private:
    const CaptionIndex& index(const std::string& channel) const;

    PipelineConfig config_;
    std::unique_ptr<TextEmbedderClient> text_;
    std::unique_ptr<RerankerClient> reranker_;
    Corpus corpus_;
    std::vector<Topic> topics_;
    std::map<std::string, CaptionIndex> indices_;
    std::vector<Caption> captions_;
    std::unordered_map<CaptionId, std::size_t> caption_rows_;
    std::unordered_map<FrameId, std::vector<std::size_t>> by_frame_;
};

}  // namespace lifelog::app
