#include "lifelog/app/pipeline.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lifelog/app/http_clients.hpp"
#include "lifelog/filtering.hpp"
#include "lifelog/textindex.hpp"

namespace lifelog::app {

namespace fs = std::filesystem;

const std::vector<ChannelSource>& channel_sources() {
    static const std::vector<ChannelSource> sources{
        {"single", "single", CaptionGranularity::Single},
        {"collective", "collective", CaptionGranularity::Collective},
        {"fine", "merged", CaptionGranularity::FineGrained},
        {"coarse", "merged", CaptionGranularity::CoarseGrained},
    };
    return sources;
}

Clients Clients::from_config(const PipelineConfig& c) {
    return Clients{make_captioner(c.captioner), make_vision_embedder(c.vision_embedder),
                   make_text_embedder(c.text_embedder), make_reranker(c.reranker)};
}

void write_atomically(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StageError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw StageError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<FrameId> load_filtered(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw StageError("no filtered frame list at " + path.string() + "; run `filter` first");
    std::vector<FrameId> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.emplace_back(line);
    }
    return out;
}

namespace {

StageResult skipped(const fs::path& artifact) {
    StageResult r;
    r.skipped = true;
    r.summary = fmt::format("{} exists; skipping (use --force to redo)", artifact.string());
    return r;
}

std::string captions_text(const std::vector<Caption>& captions) {
    std::string out;
    for (const auto& c : captions) {
        out += caption_to_json_line(c);
        out += '\n';
    }
    return out;
}

std::string failures_text(const std::vector<CaptionFailure>& failures) {
    std::string out;
    for (const auto& f : failures) {
        nlohmann::json row{{"frames", nlohmann::json::array()}, {"reason", f.reason}};
        for (const auto& id : f.frames) row["frames"].push_back(id.str());
        out += row.dump() + '\n';
    }
    return out;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, Clients& clients) : config_(std::move(config)), clients_(clients) {}

RetryPolicy Pipeline::retry() const {
    RetryPolicy r;
    if (config_.captioner.backend == "mock" && config_.vision_embedder.backend == "mock" &&
        config_.text_embedder.backend == "mock") {
        r = RetryPolicy::no_wait();
    }
    return r;
}

CaptionJobOptions Pipeline::job_options() const {
    CaptionJobOptions o;
    if (!config_.paths.templates.empty()) o.templates = PromptTemplates::load(config_.paths.templates);
    o.retry = retry();
    o.parallelism = config_.params.parallelism;
    std::string stamp = config_.params.fixed_clock;
    if (stamp.empty() && config_.captioner.backend == "mock") stamp = "2000-01-01T00:00:00Z";
    if (stamp.empty()) {
        o.clock = utc_now_iso;
    } else {
        o.clock = [stamp] { return stamp; };
    }
    return o;
}

const Corpus& Pipeline::corpus() {
    if (!corpus_) {
        const auto path = config_.paths.corpus();
        if (!fs::exists(path)) throw StageError("no corpus at " + path.string() + "; run `ingest` first");
        corpus_ = std::make_unique<Corpus>(ingest_manifest(path).corpus);
    }
    return *corpus_;
}

StageResult Pipeline::ingest(bool force) {
    const auto out = config_.paths.corpus();
    if (!force && fs::exists(out)) return skipped(out);
    if (config_.paths.manifest.empty()) throw StageError("paths.manifest is not configured");

    auto ingested = ingest_manifest(config_.paths.manifest);
    StageResult r;
    for (const auto& w : ingested.warnings) {
        r.warnings.push_back(fmt::format("manifest line {}: {}: {}", w.line, w.frame.str(), w.message));
        spdlog::warn("{}", r.warnings.back());
    }
    const auto& src = ingested.corpus;
    std::vector<Frame> frames(src.frames().begin(), src.frames().end());
    for (auto& f : frames) f.image_path = fs::absolute(src.absolute_image_path(f)).lexically_normal();
    std::vector<VideoSegment> segments(src.segments().begin(), src.segments().end());
    Corpus canonical(src.root(), std::move(segments), std::move(frames));

    fs::create_directories(out.parent_path());
    const auto tmp = fs::path(out.string() + ".tmp");
    write_manifest(canonical, tmp);
    fs::rename(tmp, out);
    corpus_ = std::make_unique<Corpus>(std::move(canonical));
    r.summary = fmt::format("ingested {} frames in {} segments", corpus_->frame_count(), corpus_->segments().size());
    return r;
}

StageResult Pipeline::caption(const std::string& method, bool force) {
    if (method != "single" && method != "collective" && method != "merged") {
        throw StageError("unknown caption method '" + method + "' (expected single, collective or merged)");
    }
    const auto out = config_.paths.captions(method);
    if (!force && fs::exists(out)) return skipped(out);
    const auto& c = corpus();
    auto& client = *clients_.captioner;
    const auto caps = client.capabilities();
    const auto opts = job_options();

    StageResult r;
    std::vector<Caption> captions;
    std::vector<CaptionFailure> failures;
    if (method == "single") {
        if (!caps.single_image) throw StageError("captioner does not accept single images");
        auto run = caption_single(client, c, opts);
        captions = std::move(run.captions);
        failures = std::move(run.failures);
        r.warnings = std::move(run.warnings);
    } else if (method == "collective") {
        if (!caps.multi_image) throw StageError("captioner does not accept multiple images");
        const auto windows = window_frames(c, config_.params.window_size);
        auto run = caption_collective(client, c, windows, opts);
        captions = std::move(run.captions);
        failures = std::move(run.failures);
        r.warnings = std::move(run.warnings);
    } else {
        if (!caps.multi_image || !caps.structured_output) {
            throw StageError("merged captioning needs multi-image input and structured output");
        }
        const auto kept = load_filtered(config_.paths.filtered());
        std::unordered_set<FrameId> keep(kept.begin(), kept.end());
        std::optional<std::string> summary;
        std::size_t flagged = 0;
        for (const auto& seg : c.segments()) {
            std::vector<Frame> frames;
            for (const auto& id : seg.frames) {
                if (keep.contains(id)) frames.push_back(c.frame(id));
            }
            if (frames.empty()) continue;
            auto seg_opts = opts;
            seg_opts.batch_prefix = seg.id.str();
            seg_opts.image_root = c.root();
            auto run = caption_merged(client, frames, config_.params.merged_batch_size, summary, seg_opts);
            summary = run.final_summary;
            flagged += run.flagged_batches.size();
            for (const auto& b : run.flagged_batches) r.warnings.push_back("batch " + b + " fell back to degenerate output");
            captions.insert(captions.end(), std::make_move_iterator(run.captions.begin()),
                            std::make_move_iterator(run.captions.end()));
            failures.insert(failures.end(), run.failures.begin(), run.failures.end());
            r.warnings.insert(r.warnings.end(), run.warnings.begin(), run.warnings.end());
        }
        if (flagged) spdlog::warn("{} merged batches were flagged", flagged);
    }
    for (const auto& f : failures) {
        r.warnings.push_back(fmt::format("uncaptioned: {} frame(s) starting at {}: {}", f.frames.size(),
                                         f.frames.empty() ? std::string("?") : f.frames.front().str(), f.reason));
    }
    write_atomically(fs::path(out).replace_extension(".failures.jsonl"), failures_text(failures));
    write_atomically(out, captions_text(captions));
    r.summary = fmt::format("{} captions: {} written, {} uncaptioned batches", method, captions.size(), failures.size());
    return r;
}

StageResult Pipeline::embed_frames(bool force) {
    const auto out = config_.paths.frame_embeddings();
    if (!force && fs::exists(out)) return skipped(out);
    const auto& c = corpus();
    auto result = lifelog::embed_frames(*clients_.vision, c, c.frames(), retry(), config_.params.parallelism);
    const auto store = to_vector_store(result.embeddings);
    fs::create_directories(out.parent_path());
    const auto tmp = fs::path(out.string() + ".tmp");
    store.save(tmp);
    fs::rename(tmp, out);
    StageResult r;
    r.warnings = std::move(result.warnings);
    r.summary = fmt::format("embedded {} of {} frames", store.size(), c.frame_count());
    return r;
}

StageResult Pipeline::filter(bool force) {
    const auto out = config_.paths.filtered();
    if (!force && fs::exists(out)) return skipped(out);
    const auto& c = corpus();
    const auto emb_path = config_.paths.frame_embeddings();
    if (!fs::exists(emb_path)) throw StageError("no frame embeddings at " + emb_path.string() + "; run `embed --target frames` first");
    const auto store = VectorStore::load(emb_path);

    std::string text;
    std::size_t kept = 0;
    for (const auto& seg : c.segments()) {
        std::vector<Frame> frames;
        for (const auto& id : seg.frames) frames.push_back(c.frame(id));
        for (const auto& f : filter_frames(frames, store, config_.params.filter_threshold)) {
            text += f.id.str() + '\n';
            ++kept;
        }
    }
    write_atomically(out, text);
    StageResult r;
    r.summary = fmt::format("kept {} of {} frames at threshold {}", kept, c.frame_count(), config_.params.filter_threshold);
    return r;
}

StageResult Pipeline::embed_captions(bool force) {
    const auto& c = corpus();
    StageResult r;
    std::size_t built = 0, present = 0;
    std::map<std::string, std::vector<Caption>> stores;
    for (const auto& src : channel_sources()) {
        const auto stem = config_.paths.index(src.channel);
        const auto marker = fs::path(stem.string() + ".json");
        const auto store_path = config_.paths.captions(src.store);
        if (!fs::exists(store_path)) continue;
        ++present;
        if (!force && fs::exists(marker)) {
            r.warnings.push_back(src.channel + " index exists; skipping");
            continue;
        }
        if (!stores.contains(src.store)) stores[src.store] = load_captions(store_path, &c);
        auto result = build_index(stores[src.store], *clients_.text, {src.granularity}, &c, retry(),
                                  config_.params.parallelism);
        r.warnings.insert(r.warnings.end(), result.warnings.begin(), result.warnings.end());
        fs::create_directories(stem.parent_path());
        const auto tmp = fs::path(stem.string() + ".tmp");
        result.index.save(tmp);
        fs::rename(fs::path(tmp.string() + ".vemb"), fs::path(stem.string() + ".vemb"));
        fs::rename(fs::path(tmp.string() + ".json"), marker);
        spdlog::info("{} index: {} captions", src.channel, result.index.size());
        ++built;
    }
    if (present == 0) throw StageError("no caption stores found under " + (config_.paths.work_dir / "captions").string());
    r.skipped = built == 0;
    r.summary = fmt::format("built {} caption indices", built);
    return r;
}

std::vector<std::pair<std::string, StageResult>> Pipeline::run_all(bool force) {
    std::vector<std::pair<std::string, StageResult>> out;
    out.emplace_back("ingest", ingest(force));
    out.emplace_back("caption single", caption("single", force));
    out.emplace_back("caption collective", caption("collective", force));
    out.emplace_back("embed frames", embed_frames(force));
    out.emplace_back("filter", filter(force));
    out.emplace_back("caption merged", caption("merged", force));
    out.emplace_back("embed captions", embed_captions(force));
    return out;
}

std::vector<MetricsReport> evaluate_run_files(std::span<const fs::path> run_files, const Qrels& qrels,
                                              std::span<const Topic> topics, std::size_t k) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<RetrievalRun>> by_method;
    for (const auto& file : run_files) {
        for (auto& run : load_trec_runs(file)) {
            if (!by_method.contains(run.method)) order.push_back(run.method);
            by_method[run.method].push_back(std::move(run));
        }
    }
    std::vector<MetricsReport> reports;
    for (const auto& method : order) reports.push_back(evaluate_runs(by_method[method], qrels, topics, k, method));
    return reports;
}

}  // namespace lifelog::app
