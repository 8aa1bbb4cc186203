#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lifelog::app {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Looks up an environment variable; injectable for tests.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// One external model service. backend is "mock" or "http".
struct ClientConfig {
    std::string backend = "mock";
    std::string url;
    std::string model;
    /// Name of the environment variable holding the credential.
    std::string api_key_env;
    /// Resolved from api_key_env at load; never read from the file.
    std::string api_key;
    int timeout_seconds = 120;
    std::size_t dimension = 0;  // embedders only; 0 keeps the mock default
    int max_tokens = 512;       // captioner only
    std::uint64_t seed = 0;     // mock backends; 0 keeps the mock default
};

/// Artifact locations. Relative paths in the file are resolved against the
/// file's directory.
struct PathsConfig {
    std::filesystem::path manifest;
    std::filesystem::path work_dir;
    std::filesystem::path qrels;
    std::filesystem::path topics;
    std::filesystem::path templates;  // optional prompt template directory

    std::filesystem::path corpus() const { return work_dir / "corpus.jsonl"; }
    std::filesystem::path captions(std::string_view method) const;
    std::filesystem::path frame_embeddings() const { return work_dir / "embeddings" / "frames.vemb"; }
    std::filesystem::path filtered() const { return work_dir / "filtered.txt"; }
    /// Stem of a channel index (single, collective, fine, coarse).
    std::filesystem::path index(std::string_view channel) const;
    std::filesystem::path runs() const { return work_dir / "runs"; }
    std::filesystem::path thumbnails() const { return work_dir / "thumbnails"; }
};

struct Parameters {
    std::size_t window_size = 8;
    std::size_t merged_batch_size = 10;
    double filter_threshold = 0.8;
    std::size_t k = 10;
    std::size_t rerank_pool = 100;
    bool query_prefix = true;
    double fusion_weight = 0.5;
    std::string combination_a = "single";
    std::string combination_b = "collective";
    std::string rerank_channel = "fine";
    std::size_t parallelism = 4;
    /// Fixed generated_at stamp for reproducible caption stores; empty means
    /// wall-clock time.
    std::string fixed_clock;
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    int thumbnail_size = 256;
    std::size_t threads = 8;
};

struct PipelineConfig {
    std::filesystem::path source;  // config file, empty when built in code
    PathsConfig paths;
    Parameters params;
    ClientConfig captioner;
    ClientConfig vision_embedder;
    ClientConfig text_embedder;
    ClientConfig reranker;
    ServerConfig server;
};

/// Parses a TOML document. Every scalar `key` of `[section]` can be
/// overridden by the environment variable LIFELOG_<SECTION>_<KEY>
/// (upper case). Credentials come only from the variable named by a client's
/// api_key_env; an `api_key` entry in the file is rejected.
///
/// Throws ConfigError for syntax errors, unknown keys, wrong types, values
/// outside their documented range, or input paths that do not exist.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                            const EnvLookup& env = process_env());
PipelineConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env());

/// Range checks shared by parse_config and code-built configs.
void validate(const PipelineConfig& config);

/// Commented TOML document with every key at its default, for `lifelog init`.
std::string default_config_text();

}  // namespace lifelog::app
