// Acceptance gate: prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "app_fixture.hpp"
#include "fixture.hpp"
#include "lifelog/app/engine.hpp"
#include "lifelog/app/http_clients.hpp"
#include "lifelog/captioning.hpp"
#include "lifelog/eval.hpp"
#include "lifelog/filtering.hpp"
#include "lifelog/mock_clients.hpp"
#include "lifelog/retrieval.hpp"
#include "lifelog/textindex.hpp"
#include "merged_cases.hpp"
#include "metric_oracle.hpp"
#include "planted.hpp"

namespace {

using namespace lifelog;
namespace fs = std::filesystem;

// Tolerances and sizes are fixed here so a run's output is comparable over time.
constexpr double kMetricTolerance = 1e-12;
constexpr int kOracleInstances = 500;
constexpr double kOracleBudgetSeconds = 5.0;
constexpr int kFilterSequences = 100;

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status = Status::Pass;
    std::string detail;
};

// Collects failed expectations inside one criterion.
class Checker {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++count_;
    }
    Outcome outcome(std::string detail) const {
        if (count_ == 0) return {Status::Pass, std::move(detail)};
        std::string msg = fmt::format("{} failed check(s): ", count_);
        for (std::size_t i = 0; i < failures_.size(); ++i) msg += (i ? "; " : "") + failures_[i];
        return {Status::Fail, msg};
    }

private:
    std::vector<std::string> failures_;
    std::size_t count_ = 0;
};

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
    return out;
}

std::vector<std::string> frame_ids(const RetrievalRun& run) {
    std::vector<std::string> out;
    for (const auto& f : run.frames) out.push_back(f.frame.str());
    return out;
}

// --- metric oracle --------------------------------------------------------

Outcome metric_oracle() {
    Checker c;
    std::mt19937_64 rng(20240611);
    double worst = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < kOracleInstances; ++i) {
        const auto inst = testing::random_instance(rng);
        Qrels q;
        for (const auto& j : inst.qrels) q.add(j.topic, FrameId(j.frame), j.cluster);
        RetrievalRun run{"T", "m", {}, inst.run.size()};
        for (std::size_t r = 0; r < inst.run.size(); ++r) {
            run.frames.push_back({FrameId(inst.run[r]), static_cast<double>(inst.run.size() - r), {}});
        }
        const auto o = testing::oracle_metrics(inst.qrels, "T", inst.run, inst.k);
        const double diffs[] = {std::abs(precision_at_k(run, q, inst.k) - o.p),
                                std::abs(cluster_recall_at_k(run, q, inst.k) - o.cr),
                                std::abs(f1_at_k(run, q, inst.k) - o.f1)};
        for (double d : diffs) {
            worst = std::max(worst, d);
            c.expect(d <= kMetricTolerance, fmt::format("instance {} differs by {:.3g}", i, d));
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.expect(seconds < kOracleBudgetSeconds, fmt::format("took {:.2f} s", seconds));
    return c.outcome(fmt::format("{} instances, max |diff| {:.1e} (tol {:.0e}), {:.3f} s", kOracleInstances, worst,
                                 kMetricTolerance, seconds));
}

// --- planted end to end -----------------------------------------------------

struct PlantedBuild {
    testing::BuiltDataset built;
    std::map<std::string, std::string> run_files;  // method -> bytes
    std::map<std::string, double> precision;       // method -> P@10 on T1

    explicit PlantedBuild(const app::SyntheticOptions& options) : built(options) {
        const auto& cfg = built.config;
        const app::SearchEngine engine(cfg, app::make_text_embedder(cfg.text_embedder),
                                       app::make_reranker(cfg.reranker));
        const auto qrels = load_qrels(cfg.paths.qrels);
        for (auto m : app::all_methods()) {
            const auto results = engine.run_topics(engine.topics(), m);
            std::string text;
            for (const auto& r : results) text += format_trec_run(r.run);
            const auto path = cfg.paths.runs() / (std::string(app::to_string(m)) + ".trec");
            app::write_atomically(path, text);
            run_files[std::string(app::to_string(m))] = testing::read_file(path);
            precision[std::string(app::to_string(m))] = precision_at_k(results.front().run, qrels, 10);
        }
    }
};

Outcome planted_end_to_end() {
    Checker c;
    app::SyntheticOptions options;
    options.frames = 200;
    options.days = 2;
    options.topics = 1;
    options.planted_per_topic = 10;
    options.seed = 1;
    const PlantedBuild first(options);
    const PlantedBuild second(options);

    c.expect(first.built.data.planted.at("T1").size() == 10, "expected 10 planted frames");
    for (const char* m : {"single", "combination"}) {
        c.expect(first.precision.at(m) == 1.0, fmt::format("{} P@10 = {:.2f}", m, first.precision.at(m)));
    }
    for (const auto& [m, bytes] : first.run_files) {
        c.expect(!bytes.empty(), m + " run is empty");
        c.expect(bytes == second.run_files.at(m), m + " run differs between builds");
    }
    return c.outcome(fmt::format("200 frames, 10 planted; P@10 single {:.2f}, combination {:.2f}; {} run files "
                                 "byte-identical across two builds",
                                 first.precision.at("single"), first.precision.at("combination"),
                                 first.run_files.size()));
}

// --- filter semantics -----------------------------------------------------

struct Sequence {
    std::vector<Frame> frames;
    VectorStore store;
};

Sequence make_sequence(const std::vector<std::vector<float>>& vectors) {
    Sequence s;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        Frame f{FrameId("f" + std::to_string(i)), SegmentId("s"), i, Timestamp(static_cast<std::int64_t>(i), 0),
                "x"};
        s.store.add(f.id.str(), vectors[i]);
        s.frames.push_back(std::move(f));
    }
    return s;
}

std::vector<std::size_t> kept(const Sequence& s, double t) {
    std::vector<std::size_t> out;
    for (const auto& f : filter_frames(s.frames, s.store, t)) out.push_back(f.index_in_segment);
    return out;
}

std::vector<float> at_degrees(double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    return {static_cast<float>(std::cos(r)), static_cast<float>(std::sin(r))};
}

std::string show(const std::vector<std::size_t>& v) {
    std::string out;
    for (auto i : v) out += (out.empty() ? "" : ",") + std::to_string(i);
    return "{" + out + "}";
}

Outcome filter_semantics() {
    Checker c;
    using Idx = std::vector<std::size_t>;
    struct Trace {
        std::string name;
        Sequence seq;
        std::map<double, Idx> expected;
    };
    const std::vector<float> e1{1, 0}, e2{0, 1};
    // Traced by hand against the last kept frame; a frame is dropped when its
    // cosine to that frame is >= t.
    std::vector<Trace> traces;
    traces.push_back({"angles 0,10,20,50,55,120",
                      make_sequence({at_degrees(0), at_degrees(10), at_degrees(20), at_degrees(50), at_degrees(55),
                                     at_degrees(120)}),
                      {{0.0, {0, 5}}, {0.8, {0, 3, 5}}, {1.0, {0, 1, 2, 3, 4, 5}}}});
    traces.push_back({"e1 e1 e2 e2 e1", make_sequence({e1, e1, e2, e2, e1}),
                      {{0.0, {0}}, {0.8, {0, 2, 4}}, {1.0, {0, 2, 4}}}});
    traces.push_back({"drift 0,15,30,45,60",
                      make_sequence({at_degrees(0), at_degrees(15), at_degrees(30), at_degrees(45), at_degrees(60)}),
                      {{0.0, {0}}, {0.8, {0, 3}}, {1.0, {0, 1, 2, 3, 4}}}});
    traces.push_back({"cos exactly 0.8", make_sequence({{1, 0}, {4, 3}}), {{0.0, {0}}, {0.8, {0}}, {1.0, {0, 1}}}});
    for (const auto& t : traces) {
        for (const auto& [threshold, want] : t.expected) {
            const auto got = kept(t.seq, threshold);
            c.expect(got == want,
                     fmt::format("{} at {}: kept {} want {}", t.name, threshold, show(got), show(want)));
        }
    }

    // Positive-orthant sequences with repeats and small perturbations.
    std::mt19937 rng(2024);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::normal_distribution<float> jitter(0.0f, 0.08f);
    for (int trial = 0; trial < kFilterSequences; ++trial) {
        std::vector<std::vector<float>> vectors;
        const std::size_t n = 5 + rng() % 40;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<float> v(16);
            const float roll = u(rng);
            if (i > 0 && roll < 0.3f) {
                v = vectors.back();
            } else if (i > 0 && roll < 0.7f) {
                v = vectors.back();
                for (auto& x : v) x = std::max(0.0f, x + jitter(rng));
                if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) v[0] = 1.0f;
            } else {
                for (auto& x : v) x = u(rng);
            }
            vectors.push_back(v);
        }
        const auto s = make_sequence(vectors);
        const auto k0 = kept(s, 0.0), k8 = kept(s, 0.8), k10 = kept(s, 1.0);
        c.expect(std::includes(k8.begin(), k8.end(), k0.begin(), k0.end()),
                 fmt::format("sequence {}: kept at 0.0 not within kept at 0.8", trial));
        c.expect(std::includes(k10.begin(), k10.end(), k8.begin(), k8.end()),
                 fmt::format("sequence {}: kept at 0.8 not within kept at 1.0", trial));
    }
    return c.outcome(fmt::format("{} hand traces x 3 thresholds; monotone over {{0, 0.8, 1.0}} on {} random sequences",
                                 traces.size(), kFilterSequences));
}

// --- combination replacement ------------------------------------------------

Outcome combination_replacement() {
    Checker c;
    // 40 frames in windows of 8. Single scores fall with time, so channel A
    // ranks f0..f9 first. The last window has by far the best collective
    // caption and contains the planted relevant frame f35, which channel A
    // ranks 36th.
    const auto corpus = testing::line_corpus(40);
    std::vector<testing::Planted> singles, windows;
    for (int i = 0; i < 40; ++i) singles.push_back({fmt::format("s{}", i), 0.9 - 0.01 * i, {fmt::format("f{}", i)}});
    const double window_scores[] = {0.5, 0.4, 0.3, 0.2, 0.95};
    for (int w = 0; w < 5; ++w) {
        std::vector<std::string> frames;
        for (int i = 0; i < 8; ++i) frames.push_back(fmt::format("f{}", 8 * w + i));
        windows.push_back({fmt::format("w{}", w), window_scores[w], frames});
    }
    const auto a = frame_scores(testing::planted_index(singles, corpus), testing::kPlantedQuery, "single");
    const auto b = frame_scores(testing::planted_index(windows, corpus), testing::kPlantedQuery, "collective");
    const auto run_a = retrieve_topk(a, 40, corpus, "T", "single");
    const auto combined = retrieve_topk(combine_channels(a, b, 0.5), 10, corpus, "T", "combination");

    Qrels q;
    for (const char* f : {"f0", "f1", "f35"}) q.add("T", FrameId(f), std::string("c-") + f);
    const auto effects = replacement_effects(run_a, combined, q, 10);

    // Combined top 10 by hand: the eight frames of the last window
    // ((0.58..0.51 + 0.95) / 2 = 0.765..0.73), then f0 and f1 (0.70, 0.695).
    const std::vector<std::string> want{"f32", "f33", "f34", "f35", "f36", "f37", "f38", "f39", "f0", "f1"};
    c.expect(frame_ids(combined) == want, "combined top 10 is " + join(frame_ids(combined)));
    c.expect(effects.positive == 1, fmt::format("positive = {}", effects.positive));
    c.expect(effects.negative == 7, fmt::format("negative = {}", effects.negative));
    const Replacement planted{FrameId("f35"), 36, 4, true};
    const bool found = std::find(effects.details.begin(), effects.details.end(), planted) != effects.details.end();
    c.expect(found, "f35 not reported as moving from 36th to 4th");
    return c.outcome(fmt::format("planted frame moves from channel-A rank 36 to combined rank 4; "
                                 "replacements +{} / -{}",
                                 effects.positive, effects.negative));
}

// --- window and expansion conservation ------------------------------------

Outcome window_conservation() {
    Checker c;
    std::mt19937 rng(42);
    const auto& scenes = testing::background_scenes();
    int expansions = 0;
    for (int trial = 0; trial < 20; ++trial) {
        testing::TempDir dir;
        std::vector<std::vector<std::string>> days(1 + rng() % 3);
        for (auto& d : days) {
            const std::size_t n = 1 + rng() % 40;
            while (d.size() < n) {
                const auto& scene = scenes[rng() % scenes.size()];
                for (std::size_t r = 1 + rng() % 5; r > 0 && d.size() < n; --r) d.push_back(scene);
            }
        }
        const auto corpus = ingest_manifest(testing::write_synthetic_corpus(dir.path(), days)).corpus;
        const auto windows = window_frames(corpus, 8);

        std::map<FrameId, int> seen;
        for (const auto& w : windows) {
            for (const auto& f : w.frames) ++seen[f];
        }
        c.expect(seen.size() == corpus.frame_count(), fmt::format("trial {}: windows miss frames", trial));
        for (const auto& [f, n] : seen) c.expect(n == 1, fmt::format("trial {}: {} in {} windows", trial, f.str(), n));

        MockCaptioner captioner;
        MockTextEmbedder embedder;
        CaptionJobOptions options;
        options.retry = RetryPolicy::no_wait(1);
        options.clock = [] { return std::string("2000-01-01T00:00:00Z"); };
        const auto captions = caption_collective(captioner, corpus, windows, options).captions;
        const auto index = build_index(captions, embedder, {CaptionGranularity::Collective}, &corpus).index;

        // Query with one window's caption text: the retrieved top caption
        // expands to exactly the frames of its window.
        const auto& target = captions[rng() % captions.size()];
        const auto query = embed_query(embedder, target.text);
        const auto top = index.search(query, 1).at(0);
        const auto& top_frames = index.find(top.id)->frame_ids;
        const auto window = std::find_if(windows.begin(), windows.end(),
                                         [&](const Window& w) { return w.frames == top_frames; });
        c.expect(window != windows.end(), fmt::format("trial {}: {} is not a window", trial, top.id.str()));
        const auto run = retrieve_topk(frame_scores(index, query, "collective"), top_frames.size(), corpus);
        std::set<FrameId> got;
        for (const auto& f : run.frames) got.insert(f.frame);
        c.expect(got == std::set<FrameId>(top_frames.begin(), top_frames.end()),
                 fmt::format("trial {}: expansion of {} differs from its window", trial, top.id.str()));
        ++expansions;
    }
    return c.outcome(fmt::format("20 random corpora: every frame in exactly one window; {} expansions equal their "
                                 "window",
                                 expansions));
}

// --- merged output parsing ------------------------------------------------

Outcome merged_parsing() {
    Checker c;
    const auto batch = testing::merged_case_batch();
    const auto good = testing::good_merged_cases();
    const auto bad = testing::bad_merged_cases();
    c.expect(good.size() >= 10 && bad.size() >= 10, "fewer than 10 cases of a kind");
    for (const auto& g : good) {
        try {
            const auto out = parse_merged_output(g.raw, batch);
            c.expect(std::to_string(out.coarse_groups.size()) == g.expect, g.name + ": wrong group count");
            c.expect(out.fine_grained.size() == batch.size(), g.name + ": wrong fine-grained count");
        } catch (const std::exception& e) {
            c.expect(false, g.name + ": " + e.what());
        }
    }
    for (const auto& b : bad) {
        try {
            parse_merged_output(b.raw, batch);
            c.expect(false, b.name + ": accepted");
        } catch (const MergedOutputError& e) {
            c.expect(e.kind() == *b.error, b.name + ": kind " + std::string(to_string(e.kind())));
            c.expect(std::string(e.what()).find(b.expect) != std::string::npos, b.name + ": diagnostic " + e.what());
        }
    }

    // Batch 1 of 2 answers badly twice: one re-prompt, then the fallback.
    testing::TempDir dir;
    const auto corpus = ingest_manifest(testing::write_synthetic_corpus(dir.path(), {{"a", "b", "c", "d", "e"}})).corpus;
    CaptionJobOptions options;
    options.retry = RetryPolicy::no_wait(1);
    options.clock = [] { return std::string("2000-01-01T00:00:00Z"); };
    options.image_root = corpus.root();
    options.batch_prefix = "day0";
    MockCaptioner failing;
    failing.return_malformed(2);
    const auto fallen = caption_merged(failing, corpus.frames(), 3, std::nullopt, options);
    c.expect(failing.calls() == 3, fmt::format("{} captioner calls, want 3", failing.calls()));
    c.expect(fallen.flagged_batches == std::vector<std::string>{"day0#1"}, "flagged " + join(fallen.flagged_batches));
    const auto degenerate = degenerate_merged_output(std::vector<FrameId>{FrameId("x"), FrameId("y")});
    c.expect(degenerate.coarse_groups.size() == 2, "degenerate output is not one group per frame");

    // One bad answer is recovered by the re-prompt.
    MockCaptioner recovering;
    recovering.return_malformed(1);
    const auto recovered = caption_merged(recovering, corpus.frames(), 3, std::nullopt, options);
    c.expect(recovering.calls() == 3 && recovered.flagged_batches.empty(), "single bad answer was not recovered");
    return c.outcome(fmt::format("{} well-formed and {} malformed answers; fallback after exactly one failed re-prompt",
                                 good.size(), bad.size()));
}

// --- reranker contract ----------------------------------------------------

// Expansion computed independently of rerank_llm: each caption's frames in
// time order, first occurrence wins, truncated to k; score 1/position.
std::vector<std::pair<std::string, double>> expand(const CaptionIndex& index, const Corpus& corpus,
                                                   const std::vector<CaptionId>& order, std::size_t k) {
    std::vector<std::pair<std::string, double>> out;
    std::set<FrameId> seen;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        auto frames = index.find(order[pos])->frame_ids;
        std::sort(frames.begin(), frames.end(), [&](const FrameId& x, const FrameId& y) {
            return corpus.frame(x).timestamp < corpus.frame(y).timestamp;
        });
        for (const auto& f : frames) {
            if (out.size() < k && seen.insert(f).second) out.emplace_back(f.str(), 1.0 / static_cast<double>(pos + 1));
        }
    }
    return out;
}

std::vector<std::pair<std::string, double>> pairs(const RetrievalRun& run) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& f : run.frames) out.emplace_back(f.frame.str(), f.score);
    return out;
}

Outcome reranker_contract() {
    Checker c;
    const auto corpus = testing::line_corpus(30);
    std::mt19937 rng(9);
    std::vector<testing::Planted> plants;
    for (int i = 0; i < 12; ++i) {
        std::vector<std::string> frames;
        for (std::size_t n = 1 + rng() % 4; n > 0; --n) frames.push_back(fmt::format("f{}", rng() % 30));
        std::sort(frames.begin(), frames.end());
        frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
        plants.push_back({fmt::format("c{:02}", i), 0.95 - 0.05 * i, frames});
    }
    const auto index = testing::planted_index(plants, corpus);
    const std::size_t pool = 10, k = 10;
    std::vector<CaptionId> pool_order;
    for (const auto& r : index.search(testing::kPlantedQuery, pool)) pool_order.push_back(r.id);

    IdentityReranker identity;
    const auto id_run = rerank_llm(identity, index, testing::kPlantedQuery, "t", corpus, pool, k).run;
    c.expect(pairs(id_run) == expand(index, corpus, pool_order, k), "identity reranker changed the ranking");

    ReverseReranker reverse;
    auto reversed = pool_order;
    std::reverse(reversed.begin(), reversed.end());
    const auto rev_run = rerank_llm(reverse, index, testing::kPlantedQuery, "t", corpus, pool, k).run;
    c.expect(pairs(rev_run) == expand(index, corpus, reversed, k), "permutation is not expanded in its order");

    // c10 and c11 rank below the pool; "ghost" does not exist.
    ScriptedReranker scripted({CaptionId("c10"), CaptionId("c03"), CaptionId("ghost"), CaptionId("c00"),
                               CaptionId("c11"), CaptionId("c03")});
    const auto scripted_result = rerank_llm(scripted, index, testing::kPlantedQuery, "t", corpus, pool, k);
    c.expect(pairs(scripted_result.run) == expand(index, corpus, {CaptionId("c03"), CaptionId("c00")}, k),
             "out-of-pool ids were not dropped: " + join(frame_ids(scripted_result.run)));
    c.expect(scripted_result.warnings.size() == 4,
             fmt::format("{} warnings for 4 dropped ids", scripted_result.warnings.size()));
    return c.outcome("identity keeps the order, reversal expands reversed, out-of-pool and repeated ids dropped");
}

Outcome optional_integration() {
    return {Status::Skip,
            "needs the released caption files and live embedding services; not part of the desk-scale gate"};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"metric-oracle", metric_oracle},
        {"planted-end-to-end", planted_end_to_end},
        {"filter-semantics", filter_semantics},
        {"combination-replacement", combination_replacement},
        {"window-expansion-conservation", window_conservation},
        {"merged-output-parsing", merged_parsing},
        {"reranker-contract", reranker_contract},
        {"integration-released-captions", optional_integration},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Status::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
        if (o.status == Status::Fail) ++failed;
        std::printf("%s %-30s %s\n", tag, name.c_str(), o.detail.c_str());
    }
    std::fflush(stdout);
    return failed == 0 ? 0 : 1;
}
