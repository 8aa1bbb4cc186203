// Command-line driver for the lifelog retrieval pipeline.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lifelog/app/config.hpp"
#include "lifelog/app/engine.hpp"
#include "lifelog/app/http_clients.hpp"
#include "lifelog/app/pipeline.hpp"
#include "lifelog/app/server.hpp"
#include "lifelog/app/synthetic.hpp"
#include "lifelog/run.hpp"

namespace fs = std::filesystem;
using namespace lifelog;
using namespace lifelog::app;

namespace {

// Stages log their own warnings as they happen; the list is repeated only at
// debug level.
void report(const std::string& stage, const StageResult& r) {
    for (const auto& w : r.warnings) spdlog::debug("{}: {}", stage, w);
    if (r.warnings.empty()) {
        spdlog::info("{}: {}", stage, r.summary);
    } else {
        spdlog::info("{}: {} ({} warnings)", stage, r.summary, r.warnings.size());
    }
}

Method method_or_throw(const std::string& name) {
    auto m = parse_method(name);
    if (!m) throw CLI::ValidationError("--method", "unknown method '" + name + "'");
    return *m;
}

SearchEngine open_engine(const PipelineConfig& cfg) {
    return SearchEngine(cfg, make_text_embedder(cfg.text_embedder), make_reranker(cfg.reranker));
}

std::vector<Topic> require_topics(const PipelineConfig& cfg) {
    if (cfg.paths.topics.empty()) throw StageError("paths.topics is not configured");
    return load_topics(cfg.paths.topics);
}

void write_runs(const fs::path& out, const std::vector<SearchResult>& results) {
    std::string text;
    for (const auto& r : results) {
        for (const auto& w : r.warnings) spdlog::warn("{}: {}", r.run.topic, w);
        text += format_trec_run(r.run);
    }
    write_atomically(out, text);
    spdlog::info("wrote {} topic runs to {}", results.size(), out.string());
}

Server* g_server = nullptr;

void handle_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Caption-based lifelog moment retrieval"};
    app.require_subcommand(1);
    std::string config_path = "lifelog.toml";
    bool verbose = false, quiet = false;
    app.add_option("-c,--config", config_path, "Pipeline configuration file")->capture_default_str();
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

    bool force = false;
    auto add_force = [&force](CLI::App* cmd) { cmd->add_flag("--force", force, "Redo the stage even if its outputs exist"); };

    auto* init = app.add_subcommand("init", "Write a configuration file with default settings");
    fs::path init_out = "lifelog.toml";
    init->add_option("--out", init_out)->capture_default_str();
    add_force(init);

    auto* synth = app.add_subcommand("synth", "Write a synthetic mock dataset with planted topics");
    fs::path synth_out;
    SyntheticOptions synth_opts;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--frames", synth_opts.frames)->capture_default_str();
    synth->add_option("--days", synth_opts.days)->capture_default_str();
    synth->add_option("--topics", synth_opts.topics)->capture_default_str();
    synth->add_option("--planted", synth_opts.planted_per_topic, "Planted frames per topic")->capture_default_str();
    synth->add_option("--seed", synth_opts.seed)->capture_default_str();

    auto* ingest = app.add_subcommand("ingest", "Validate the manifest and write the canonical corpus");
    add_force(ingest);

    auto* caption = app.add_subcommand("caption", "Generate captions");
    std::string caption_method;
    caption->add_option("--method", caption_method)->required()->check(CLI::IsMember({"single", "collective", "merged"}));
    add_force(caption);

    auto* filter = app.add_subcommand("filter", "Drop near-duplicate frames using frame embeddings");
    std::optional<double> threshold;
    filter->add_option("--threshold", threshold, "Override parameters.filter_threshold")->check(CLI::Range(0.0, 1.0));
    add_force(filter);

    auto* embed = app.add_subcommand("embed", "Embed frames or captions");
    std::string target;
    embed->add_option("--target", target)->required()->check(CLI::IsMember({"frames", "captions"}));
    add_force(embed);

    auto* all = app.add_subcommand("all", "Run every offline stage in order");
    add_force(all);

    std::string method = "single";
    std::optional<std::size_t> k;
    auto* query = app.add_subcommand("query", "Search with free text and print a TREC run");
    std::string text, topic_id = "Q";
    fs::path query_out;
    query->add_option("--text", text)->required();
    query->add_option("--method", method)->capture_default_str();
    query->add_option("--k", k)->check(CLI::Range(1, 10000));
    query->add_option("--topic", topic_id, "Topic id written in the run")->capture_default_str();
    query->add_option("--out", query_out, "Also write the run to this file");

    auto* export_run = app.add_subcommand("export-run", "Run every topic with one method and write a TREC run file");
    fs::path export_out;
    export_run->add_option("--method", method)->capture_default_str();
    export_run->add_option("--out", export_out, "Default: <work_dir>/runs/<method>.trec");
    add_force(export_run);

    auto* rerank = app.add_subcommand("rerank", "Rerank every topic's candidate pool and write a TREC run file");
    fs::path rerank_out;
    rerank->add_option("--out", rerank_out, "Default: <work_dir>/runs/rerank.trec");
    add_force(rerank);

    auto* eval = app.add_subcommand("eval", "Score TREC run files against relevance judgments");
    std::vector<fs::path> run_files;
    fs::path qrels_path, json_out;
    eval->add_option("--runs", run_files, "Run files (default: every file in <work_dir>/runs)");
    eval->add_option("--qrels", qrels_path, "Default: paths.qrels");
    eval->add_option("--k", k)->check(CLI::Range(1, 10000));
    eval->add_option("--json", json_out, "Also write the reports as JSON");

    auto* serve = app.add_subcommand("serve", "Serve the search API over HTTP");
    std::optional<int> port;
    serve->add_option("--port", port)->check(CLI::Range(0, 65535));

    CLI11_PARSE(app, argc, argv);

    auto logger = spdlog::stderr_color_mt("lifelog");
    logger->set_pattern("%^%l%$: %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (init->parsed()) {
            if (fs::exists(init_out) && !force) throw StageError(init_out.string() + " exists; use --force to overwrite");
            write_atomically(init_out, default_config_text());
            spdlog::info("wrote {}", init_out.string());
            return 0;
        }
        if (synth->parsed()) {
            const auto ds = write_synthetic_dataset(synth_out, synth_opts);
            spdlog::info("wrote {} frames and {} topics to {}; next: lifelog -c {} all", synth_opts.frames,
                         ds.topics.size(), synth_out.string(), ds.config.string());
            return 0;
        }

        auto cfg = load_config(config_path);
        if (threshold) cfg.params.filter_threshold = *threshold;
        if (port) cfg.server.port = *port;

        if (ingest->parsed() || caption->parsed() || filter->parsed() || embed->parsed() || all->parsed()) {
            auto clients = Clients::from_config(cfg);
            Pipeline pipeline(cfg, clients);
            if (ingest->parsed()) report("ingest", pipeline.ingest(force));
            if (caption->parsed()) report("caption " + caption_method, pipeline.caption(caption_method, force));
            if (filter->parsed()) report("filter", pipeline.filter(force));
            if (embed->parsed()) {
                report("embed " + target, target == "frames" ? pipeline.embed_frames(force) : pipeline.embed_captions(force));
            }
            if (all->parsed()) {
                for (const auto& [stage, r] : pipeline.run_all(force)) report(stage, r);
            }
            return 0;
        }

        if (query->parsed()) {
            const auto engine = open_engine(cfg);
            const auto result = engine.search(text, method_or_throw(method), k.value_or(cfg.params.k), topic_id);
            for (const auto& w : result.warnings) spdlog::warn("{}", w);
            const auto run_text = format_trec_run(result.run);
            std::cout << run_text;
            if (!query_out.empty()) write_atomically(query_out, run_text);
            return 0;
        }

        if (export_run->parsed() || rerank->parsed()) {
            const auto m = rerank->parsed() ? Method::Rerank : method_or_throw(method);
            auto out = rerank->parsed() ? rerank_out : export_out;
            if (out.empty()) out = cfg.paths.runs() / (std::string(to_string(m)) + ".trec");
            if (!force && fs::exists(out)) {
                spdlog::info("{} exists; skipping (use --force to redo)", out.string());
                return 0;
            }
            const auto engine = open_engine(cfg);
            const auto topics = require_topics(cfg);
            write_runs(out, engine.run_topics(topics, m));
            return 0;
        }

        if (eval->parsed()) {
            if (qrels_path.empty()) qrels_path = cfg.paths.qrels;
            if (qrels_path.empty()) throw StageError("no qrels: pass --qrels or set paths.qrels");
            if (run_files.empty()) {
                if (fs::is_directory(cfg.paths.runs())) {
                    for (const auto& entry : fs::directory_iterator(cfg.paths.runs())) {
                        if (entry.path().extension() == ".trec") run_files.push_back(entry.path());
                    }
                }
                std::sort(run_files.begin(), run_files.end());
                if (run_files.empty()) throw StageError("no run files: pass --runs or run `export-run` first");
            }
            const auto qrels = load_qrels(qrels_path);
            const auto topics = require_topics(cfg);
            const auto reports = evaluate_run_files(run_files, qrels, topics, k.value_or(cfg.params.k));
            for (const auto& r : reports) {
                for (const auto& w : r.warnings) spdlog::warn("{}: {}", r.method, w);
            }
            std::cout << format_metrics_table(reports);
            if (!json_out.empty()) write_atomically(json_out, nlohmann::json(reports).dump(2) + '\n');
            return 0;
        }

        if (serve->parsed()) {
            auto engine = std::make_shared<const SearchEngine>(open_engine(cfg));
            Server server(engine, cfg.server, cfg.paths.thumbnails());
            const int bound = server.bind();
            if (bound < 0) throw StageError(fmt::format("cannot bind {}:{}", cfg.server.host, cfg.server.port));
            g_server = &server;
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            spdlog::info("serving {} frames on http://{}:{}", engine->corpus().frame_count(), cfg.server.host, bound);
            server.run();
            g_server = nullptr;
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
