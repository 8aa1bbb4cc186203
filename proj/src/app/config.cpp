#include "lifelog/app/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <toml++/toml.hpp>

namespace lifelog::app {

namespace fs = std::filesystem;

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

fs::path PathsConfig::captions(std::string_view method) const {
    return work_dir / "captions" / (std::string(method) + ".jsonl");
}

fs::path PathsConfig::index(std::string_view channel) const {
    return work_dir / "index" / std::string(channel);
}

namespace {

enum class Kind { String, Path, Int, Double, Bool };
using Scalar = std::variant<std::string, std::int64_t, double, bool>;

struct Field {
    std::string section;
    std::string key;
    Kind kind;
    std::function<void(const Scalar&)> set;
};

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string where(const Field& f) { return f.section + "." + f.key; }

Scalar from_node(const Field& f, const toml::node& node) {
    switch (f.kind) {
        case Kind::String:
        case Kind::Path:
            if (auto v = node.value_exact<std::string>()) return *v;
            break;
        case Kind::Int:
            if (auto v = node.value_exact<std::int64_t>()) return *v;
            break;
        case Kind::Double:
            if (node.is_floating_point() || node.is_integer()) return *node.value<double>();
            break;
        case Kind::Bool:
            if (auto v = node.value_exact<bool>()) return *v;
            break;
    }
    throw ConfigError(fmt::format("{}: wrong value type", where(f)));
}

Scalar from_env(const Field& f, const std::string& var, const std::string& raw) {
    auto bad = [&] { return ConfigError(fmt::format("{}: cannot parse '{}' for {}", var, raw, where(f))); };
    switch (f.kind) {
        case Kind::String:
        case Kind::Path:
            return raw;
        case Kind::Int: {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
            if (ec != std::errc() || p != raw.data() + raw.size()) throw bad();
            return v;
        }
        case Kind::Double: {
            try {
                std::size_t used = 0;
                const double v = std::stod(raw, &used);
                if (used != raw.size()) throw bad();
                return v;
            } catch (const std::logic_error&) {
                throw bad();
            }
        }
        case Kind::Bool:
            if (raw == "true" || raw == "1") return true;
            if (raw == "false" || raw == "0") return false;
            throw bad();
    }
    throw bad();
}

std::size_t to_size(const Field& f, const Scalar& s) {
    const auto v = std::get<std::int64_t>(s);
    if (v < 0) throw ConfigError(fmt::format("{}: must not be negative", where(f)));
    return static_cast<std::size_t>(v);
}

int to_int(const Field& f, const Scalar& s) {
    const auto v = std::get<std::int64_t>(s);
    if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(fmt::format("{}: out of range", where(f)));
    return static_cast<int>(v);
}

void add_client_fields(std::vector<Field>& fields, const std::string& section, ClientConfig& c) {
    auto str = [&](const char* key, std::string& dst) {
        fields.push_back({section, key, Kind::String, [&dst](const Scalar& s) { dst = std::get<std::string>(s); }});
    };
    str("backend", c.backend);
    str("url", c.url);
    str("model", c.model);
    str("api_key_env", c.api_key_env);
    fields.push_back({section, "timeout_seconds", Kind::Int, nullptr});
    fields.back().set = [&c, f = fields.back()](const Scalar& s) { c.timeout_seconds = to_int(f, s); };
    fields.push_back({section, "dimension", Kind::Int, nullptr});
    fields.back().set = [&c, f = fields.back()](const Scalar& s) { c.dimension = to_size(f, s); };
    fields.push_back({section, "max_tokens", Kind::Int, nullptr});
    fields.back().set = [&c, f = fields.back()](const Scalar& s) { c.max_tokens = to_int(f, s); };
    fields.push_back({section, "seed", Kind::Int, nullptr});
    fields.back().set = [&c, f = fields.back()](const Scalar& s) {
        c.seed = static_cast<std::uint64_t>(to_size(f, s));
    };
}

std::vector<Field> schema(PipelineConfig& cfg, std::vector<std::pair<std::string, fs::path*>>& paths) {
    std::vector<Field> fields;
    auto path = [&](const char* key, fs::path& dst) {
        fields.push_back({"paths", key, Kind::Path, [&dst](const Scalar& s) { dst = std::get<std::string>(s); }});
        paths.emplace_back(key, &dst);
    };
    path("manifest", cfg.paths.manifest);
    path("work_dir", cfg.paths.work_dir);
    path("qrels", cfg.paths.qrels);
    path("topics", cfg.paths.topics);
    path("templates", cfg.paths.templates);

    auto& p = cfg.params;
    auto size = [&](const std::string& section, const char* key, std::size_t& dst) {
        fields.push_back({section, key, Kind::Int, nullptr});
        fields.back().set = [&dst, f = fields.back()](const Scalar& s) { dst = to_size(f, s); };
    };
    auto dbl = [&](const char* key, double& dst) {
        fields.push_back({"parameters", key, Kind::Double, [&dst](const Scalar& s) { dst = std::get<double>(s); }});
    };
    auto str = [&](const std::string& section, const char* key, std::string& dst) {
        fields.push_back({section, key, Kind::String, [&dst](const Scalar& s) { dst = std::get<std::string>(s); }});
    };
    size("parameters", "window_size", p.window_size);
    size("parameters", "merged_batch_size", p.merged_batch_size);
    dbl("filter_threshold", p.filter_threshold);
    size("parameters", "k", p.k);
    size("parameters", "rerank_pool", p.rerank_pool);
    fields.push_back({"parameters", "query_prefix", Kind::Bool,
                      [&p](const Scalar& s) { p.query_prefix = std::get<bool>(s); }});
    dbl("fusion_weight", p.fusion_weight);
    str("parameters", "combination_a", p.combination_a);
    str("parameters", "combination_b", p.combination_b);
    str("parameters", "rerank_channel", p.rerank_channel);
    size("parameters", "parallelism", p.parallelism);
    str("parameters", "fixed_clock", p.fixed_clock);

    add_client_fields(fields, "captioner", cfg.captioner);
    add_client_fields(fields, "vision_embedder", cfg.vision_embedder);
    add_client_fields(fields, "text_embedder", cfg.text_embedder);
    add_client_fields(fields, "reranker", cfg.reranker);

    str("server", "host", cfg.server.host);
    fields.push_back({"server", "port", Kind::Int, nullptr});
    fields.back().set = [&cfg, f = fields.back()](const Scalar& s) { cfg.server.port = to_int(f, s); };
    fields.push_back({"server", "thumbnail_size", Kind::Int, nullptr});
    fields.back().set = [&cfg, f = fields.back()](const Scalar& s) { cfg.server.thumbnail_size = to_int(f, s); };
    size("server", "threads", cfg.server.threads);
    return fields;
}

const std::set<std::string> kChannels{"single", "collective", "fine", "coarse"};

void check_client(const std::string& name, const ClientConfig& c) {
    if (c.backend != "mock" && c.backend != "http") {
        throw ConfigError(fmt::format("{}.backend: expected 'mock' or 'http', got '{}'", name, c.backend));
    }
    if (c.backend == "http" && c.url.empty()) throw ConfigError(name + ".url is required for the http backend");
    if (c.timeout_seconds <= 0) throw ConfigError(name + ".timeout_seconds must be positive");
    if (c.max_tokens <= 0) throw ConfigError(name + ".max_tokens must be positive");
    if (c.dimension > 65536) throw ConfigError(name + ".dimension must be at most 65536");
}

}  // namespace

void validate(const PipelineConfig& cfg) {
    const auto& p = cfg.params;
    auto range = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("parameters." + what);
    };
    range(p.window_size >= 1 && p.window_size <= 1024, "window_size must lie in [1, 1024]");
    range(p.merged_batch_size >= 1 && p.merged_batch_size <= 100, "merged_batch_size must lie in [1, 100]");
    range(p.filter_threshold >= 0.0 && p.filter_threshold <= 1.0, "filter_threshold must lie in [0, 1]");
    range(p.k >= 1 && p.k <= 10000, "k must lie in [1, 10000]");
    range(p.rerank_pool >= p.k && p.rerank_pool <= 100000, "rerank_pool must lie in [k, 100000]");
    range(p.fusion_weight >= 0.0 && p.fusion_weight <= 1.0, "fusion_weight must lie in [0, 1]");
    range(kChannels.contains(p.combination_a), "combination_a must name a channel (single, collective, fine, coarse)");
    range(kChannels.contains(p.combination_b), "combination_b must name a channel (single, collective, fine, coarse)");
    range(p.combination_a != p.combination_b, "combination_a and combination_b must differ");
    range(kChannels.contains(p.rerank_channel), "rerank_channel must name a channel (single, collective, fine, coarse)");
    range(p.parallelism >= 1 && p.parallelism <= 256, "parallelism must lie in [1, 256]");

    check_client("captioner", cfg.captioner);
    check_client("vision_embedder", cfg.vision_embedder);
    check_client("text_embedder", cfg.text_embedder);
    check_client("reranker", cfg.reranker);

    if (cfg.server.port < 0 || cfg.server.port > 65535) throw ConfigError("server.port must lie in [0, 65535]");
    if (cfg.server.thumbnail_size < 16 || cfg.server.thumbnail_size > 4096) {
        throw ConfigError("server.thumbnail_size must lie in [16, 4096]");
    }
    if (cfg.server.threads < 1 || cfg.server.threads > 256) throw ConfigError("server.threads must lie in [1, 256]");

    if (cfg.paths.work_dir.empty()) throw ConfigError("paths.work_dir is required");
    auto must_exist = [](const fs::path& path, const char* key) {
        if (!path.empty() && !fs::exists(path)) {
            throw ConfigError(fmt::format("paths.{}: '{}' does not exist", key, path.string()));
        }
    };
    must_exist(cfg.paths.manifest, "manifest");
    must_exist(cfg.paths.qrels, "qrels");
    must_exist(cfg.paths.topics, "topics");
    must_exist(cfg.paths.templates, "templates");
}

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir, const EnvLookup& env) {
    toml::table doc;
    try {
        doc = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw ConfigError(fmt::format("line {}: {}", e.source().begin.line, e.description()));
    }

    PipelineConfig cfg;
    cfg.paths.work_dir = "work";
    std::vector<std::pair<std::string, fs::path*>> paths;
    const auto fields = schema(cfg, paths);

    std::set<std::pair<std::string, std::string>> known;
    for (const auto& f : fields) known.emplace(f.section, f.key);
    for (const auto& [section, node] : doc) {
        const auto* table = node.as_table();
        if (!table) throw ConfigError(fmt::format("top-level key '{}' must be a [section]", section.str()));
        for (const auto& [key, value] : *table) {
            if (key.str() == "api_key") {
                throw ConfigError(fmt::format("{}.api_key: credentials must come from the environment (set api_key_env)",
                                              section.str()));
            }
            if (!known.contains({std::string(section.str()), std::string(key.str())})) {
                throw ConfigError(fmt::format("unknown key {}.{}", section.str(), key.str()));
            }
        }
    }

    for (const auto& f : fields) {
        if (const auto* node = doc[f.section][f.key].node()) f.set(from_node(f, *node));
        const auto var = "LIFELOG_" + upper(f.section) + "_" + upper(f.key);
        if (auto raw = env(var)) f.set(from_env(f, var, *raw));
    }

    for (auto& [key, path] : paths) {
        if (!path->empty() && path->is_relative()) *path = (base_dir / *path).lexically_normal();
    }
    for (auto* c : {&cfg.captioner, &cfg.vision_embedder, &cfg.text_embedder, &cfg.reranker}) {
        if (c->api_key_env.empty()) continue;
        if (auto key = env(c->api_key_env)) c->api_key = *key;
    }
    validate(cfg);
    for (const auto& [name, c] : {std::pair{"captioner", &cfg.captioner}, std::pair{"vision_embedder", &cfg.vision_embedder},
                                  std::pair{"text_embedder", &cfg.text_embedder}, std::pair{"reranker", &cfg.reranker}}) {
        if (c->backend == "http" && !c->api_key_env.empty() && c->api_key.empty()) {
            throw ConfigError(fmt::format("{}: environment variable {} is not set", name, c->api_key_env));
        }
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path, const EnvLookup& env) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        auto cfg = parse_config(buf.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path(), env);
        cfg.source = path;
        return cfg;
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string default_config_text() {
    return R"(# Relative paths are resolved against this file's directory.
[paths]
manifest = "manifest.jsonl"
work_dir = "work"
# qrels = "qrels.txt"
# topics = "topics.json"
# templates = "prompts"

[parameters]
window_size = 8
merged_batch_size = 10
filter_threshold = 0.8
k = 10
rerank_pool = 100
query_prefix = true
fusion_weight = 0.5
combination_a = "single"
combination_b = "collective"
rerank_channel = "fine"
parallelism = 4
# fixed_clock = "2024-01-01T00:00:00Z"

# backend = "http" posts JSON to url; the credential is read from the
# environment variable named by api_key_env.
[captioner]
backend = "mock"
# url = "https://captioner.example/v1/describe"
# model = "my-vlm"
# api_key_env = "CAPTIONER_API_KEY"
timeout_seconds = 120
max_tokens = 512

[vision_embedder]
backend = "mock"

[text_embedder]
backend = "mock"

[reranker]
backend = "mock"

[server]
host = "127.0.0.1"
port = 8080
thumbnail_size = 256
threads = 8
)";
}

}  // namespace lifelog::app
