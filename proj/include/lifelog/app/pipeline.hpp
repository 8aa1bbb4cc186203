#pragma once

// Offline pipeline stages. Each stage writes its artifacts atomically under
// the configured work directory; a stage whose outputs already exist is
// skipped unless `force` is set.

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lifelog/app/config.hpp"
#include "lifelog/captioning.hpp"
#include "lifelog/clients.hpp"
#include "lifelog/corpus.hpp"
#include "lifelog/eval.hpp"

namespace lifelog::app {

class StageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StageResult {
    bool skipped = false;
    std::string summary;
    std::vector<std::string> warnings;
};

/// Channel name -> caption store method and granularity it is built from.
struct ChannelSource {
    std::string channel;
    std::string store;  // single, collective or merged
    CaptionGranularity granularity;
};
const std::vector<ChannelSource>& channel_sources();

struct Clients {
    std::unique_ptr<CaptionerClient> captioner;
    std::unique_ptr<VisionEmbedderClient> vision;
    std::unique_ptr<TextEmbedderClient> text;
    std::unique_ptr<RerankerClient> reranker;

    static Clients from_config(const PipelineConfig& config);
};

class Pipeline {
public:
    Pipeline(PipelineConfig config, Clients& clients);

    /// Reads the input manifest and writes the canonical corpus (absolute
    /// image paths) to the work directory.
    StageResult ingest(bool force = false);
    /// method: single, collective or merged. Merged captioning runs over the
    /// filtered frames, one segment after another, chaining the summary.
    StageResult caption(const std::string& method, bool force = false);
    StageResult embed_frames(bool force = false);
    StageResult filter(bool force = false);
    /// One index per channel whose caption store exists.
    StageResult embed_captions(bool force = false);

    /// ingest, caption single and collective, embed frames, filter, caption
    /// merged, embed captions; stops at the first failing stage.
    std::vector<std::pair<std::string, StageResult>> run_all(bool force = false);

    /// Canonical corpus from the work directory; throws StageError before ingest.
    const Corpus& corpus();
    const PipelineConfig& config() const { return config_; }

private:
    CaptionJobOptions job_options() const;
    RetryPolicy retry() const;

    PipelineConfig config_;
    Clients& clients_;
    std::unique_ptr<Corpus> corpus_;
};

/// Filtered frame ids in corpus order, as written by Pipeline::filter.
std::vector<FrameId> load_filtered(const std::filesystem::path& path);

/// Scores every (method) run found in the files, one report per method in
/// order of first appearance.
std::vector<MetricsReport> evaluate_run_files(std::span<const std::filesystem::path> run_files, const Qrels& qrels,
                                              std::span<const Topic> topics, std::size_t k);

/// Writes through a sibling temporary file and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace lifelog::app
