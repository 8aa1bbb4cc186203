#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "lifelog/app/config.hpp"
#include "lifelog/app/engine.hpp"

namespace httplib {
class Server;
}

namespace lifelog::app {

/// Lazily produced, disk-cached thumbnails. Decodable images are shrunk to
/// fit `size` pixels (when built with OpenCV); anything else is served as is.
class ThumbnailCache {
public:
    ThumbnailCache(std::filesystem::path dir, int size) : dir_(std::move(dir)), size_(size) {}

    struct Thumbnail {
        std::string bytes;
        std::string content_type;
    };
    /// Throws ImageReadError when the source image cannot be read.
    Thumbnail get(const FrameId& frame, const std::filesystem::path& image) const;
    std::filesystem::path cache_path(const FrameId& frame, const std::filesystem::path& image) const;

private:
    std::filesystem::path dir_;
    int size_;
};

/// JSON body of a search response, without timing.
nlohmann::json ranked_frames_json(const SearchEngine& engine, const RetrievalRun& run);

/// HTTP front end. Routes:
///   GET  /health
///   GET  /topics
///   POST /search                      {query, method, k} -> {rankedFrames, timingMs, ...}
///   GET  /frames/{id}                 frame with all captions
///   GET  /frames/{id}/thumbnail       image bytes
///   GET  /frames/{id}/context?n=4     neighbouring frames with captions
/// Errors are JSON {"error": ...} with 400 (bad request), 404 (unknown frame)
/// or 503 (engine or index not loaded).
class Server {
public:
    /// `engine` may be null; data routes then answer 503.
    Server(std::shared_ptr<const SearchEngine> engine, ServerConfig config, std::filesystem::path thumbnail_dir);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void set_engine(std::shared_ptr<const SearchEngine> engine);

    /// Binds to config.port (0 picks a free port) and returns the bound port,
    /// or -1 on failure.
    int bind();
    /// Serves until stop(); call after bind().
    void run();
    void stop();

private:
    void install_routes();
    std::shared_ptr<const SearchEngine> engine() const;

    ServerConfig config_;
    ThumbnailCache thumbnails_;
    std::unique_ptr<httplib::Server> http_;
    mutable std::mutex mu_;
    std::shared_ptr<const SearchEngine> engine_;
};

}  // namespace lifelog::app
