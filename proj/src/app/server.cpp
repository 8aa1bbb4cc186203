#include "lifelog/app/server.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#ifdef LIFELOG_HAVE_OPENCV
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#endif

#include "lifelog/app/http_clients.hpp"
#include "lifelog/mock_clients.hpp"

namespace lifelog::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string content_type_for(const fs::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".png") return "image/png";
    if (ext == ".webp") return "image/webp";
    if (ext == ".txt") return "text/plain";
    return "application/octet-stream";
}

std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    return fmt::format("{}-{:016x}", out, fnv1a(id));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

fs::path ThumbnailCache::cache_path(const FrameId& frame, const fs::path& image) const {
    auto ext = image.extension().string();
#ifdef LIFELOG_HAVE_OPENCV
    if (content_type_for(image).starts_with("image/")) ext = ".jpg";
#endif
    return dir_ / (safe_name(frame.str()) + ext);
}

ThumbnailCache::Thumbnail ThumbnailCache::get(const FrameId& frame, const fs::path& image) const {
    const auto path = cache_path(frame, image);
    if (fs::exists(path)) return {slurp(path), content_type_for(path)};

    std::string bytes = read_image_bytes(image);
#ifdef LIFELOG_HAVE_OPENCV
    if (content_type_for(image).starts_with("image/")) {
        const std::vector<unsigned char> raw(bytes.begin(), bytes.end());
        cv::Mat img = cv::imdecode(raw, cv::IMREAD_COLOR);
        if (!img.empty()) {
            const double scale = std::min(1.0, static_cast<double>(size_) / std::max(img.cols, img.rows));
            if (scale < 1.0) cv::resize(img, img, cv::Size(), scale, scale, cv::INTER_AREA);
            std::vector<unsigned char> out;
            cv::imencode(".jpg", img, out, {cv::IMWRITE_JPEG_QUALITY, 85});
            bytes.assign(out.begin(), out.end());
        }
    }
#endif
    std::error_code ec;
    fs::create_directories(dir_, ec);
    // Concurrent requests for the same frame each write their own file; the
    // rename makes whichever finishes last win with identical content.
    const auto tmp = fs::path(path.string() + fmt::format(".{}.tmp", std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << bytes;
    }
    fs::rename(tmp, path, ec);
    if (ec) spdlog::warn("thumbnail cache write failed for {}: {}", frame.str(), ec.message());
    return {std::move(bytes), content_type_for(path)};
}

json ranked_frames_json(const SearchEngine& engine, const RetrievalRun& run) {
    json frames = json::array();
    for (const auto& f : run.frames) {
        json captions = json::array();
        for (const auto& id : f.provenance) {
            if (const auto* c = engine.caption(id)) captions.push_back(c->text);
        }
        frames.push_back({{"frameId", f.frame.str()},
                          {"score", f.score},
                          {"timestamp", engine.corpus().frame(f.frame).timestamp.iso()},
                          {"thumbnailUrl", "/frames/" + httplib::detail::encode_url(f.frame.str()) + "/thumbnail"},
                          {"captions", std::move(captions)}});
    }
    return frames;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, json{{"error", message}});
}

json frame_json(const SearchEngine& engine, const FrameId& id) {
    const auto& f = engine.corpus().frame(id);
    json captions = json::array();
    for (const auto* c : engine.captions_of(id)) {
        captions.push_back({{"captionId", c->id.str()}, {"granularity", to_string(c->granularity)}, {"text", c->text}});
    }
    return {{"frameId", f.id.str()},
            {"segment", f.segment.str()},
            {"timestamp", f.timestamp.iso()},
            {"thumbnailUrl", "/frames/" + httplib::detail::encode_url(f.id.str()) + "/thumbnail"},
            {"captions", std::move(captions)}};
}

}  // namespace

Server::Server(std::shared_ptr<const SearchEngine> engine, ServerConfig config, fs::path thumbnail_dir)
    : config_(std::move(config)),
      thumbnails_(std::move(thumbnail_dir), config_.thumbnail_size),
      http_(std::make_unique<httplib::Server>()),
      engine_(std::move(engine)) {
    const auto threads = config_.threads;
    http_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    install_routes();
}

Server::~Server() { stop(); }

void Server::set_engine(std::shared_ptr<const SearchEngine> engine) {
    std::lock_guard lock(mu_);
    engine_ = std::move(engine);
}

std::shared_ptr<const SearchEngine> Server::engine() const {
    std::lock_guard lock(mu_);
    return engine_;
}

int Server::bind() {
    if (config_.port == 0) return http_->bind_to_any_port(config_.host);
    return http_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

void Server::run() { http_->listen_after_bind(); }

void Server::stop() {
    if (http_) http_->stop();
}

void Server::install_routes() {
    auto& s = *http_;

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            spdlog::error("request failed: {}", e.what());
            error(res, 500, e.what());
        }
    });

    s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        const auto e = engine();
        if (!e) return reply(res, 503, json{{"status", "unavailable"}});
        json methods = json::array();
        for (auto m : all_methods()) {
            if (e->available(m)) methods.push_back(to_string(m));
        }
        reply(res, 200, json{{"status", "ok"},
                             {"frames", e->corpus().frame_count()},
                             {"channels", e->loaded_channels()},
                             {"methods", methods}});
    });

    s.Get("/topics", [this](const httplib::Request&, httplib::Response& res) {
        const auto e = engine();
        if (!e) return error(res, 503, "index not loaded");
        json topics = json::array();
        for (const auto& t : e->topics()) {
            json row{{"id", t.id}, {"title", t.title}, {"description", t.description}};
            if (t.k_override) row["k"] = *t.k_override;
            topics.push_back(std::move(row));
        }
        reply(res, 200, topics);
    });

    s.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        if (!e) return error(res, 503, "index not loaded");
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            return error(res, 400, "request body is not JSON");
        }
        if (!body.is_object()) return error(res, 400, "request body must be a JSON object");
        if (!body.contains("query") || !body["query"].is_string() || body["query"].get<std::string>().empty()) {
            return error(res, 400, "'query' must be a non-empty string");
        }
        std::string method_name = "single";
        if (body.contains("method")) {
            if (!body["method"].is_string()) return error(res, 400, "'method' must be a string");
            method_name = body["method"].get<std::string>();
        }
        const auto method = parse_method(method_name);
        if (!method) {
            return error(res, 400, "unknown method '" + method_name +
                                       "' (expected single, collective, fine, coarse, combination or rerank)");
        }
        std::size_t k = e->config().params.k;
        if (body.contains("k")) {
            if (!body["k"].is_number_integer() || body["k"].get<long long>() < 1 || body["k"].get<long long>() > 1000) {
                return error(res, 400, "'k' must be an integer in [1, 1000]");
            }
            k = body["k"].get<std::size_t>();
        }
        const auto query = body["query"].get<std::string>();
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const auto result = e->search(query, *method, k);
            const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            reply(res, 200, json{{"query", query},
                                 {"method", method_name},
                                 {"k", k},
                                 {"rankedFrames", ranked_frames_json(*e, result.run)},
                                 {"warnings", result.warnings},
                                 {"timingMs", ms}});
        } catch (const MethodUnavailable& ex) {
            error(res, 503, ex.what());
        } catch (const TransportError& ex) {
            error(res, 503, std::string("embedding service unavailable: ") + ex.what());
        } catch (const std::invalid_argument& ex) {
            error(res, 400, ex.what());
        }
    });

    s.Get(R"(/frames/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        if (!e) return error(res, 503, "index not loaded");
        const FrameId id(req.matches[1]);
        if (!e->corpus().contains(id)) return error(res, 404, "unknown frame '" + id.str() + "'");
        reply(res, 200, frame_json(*e, id));
    });

    s.Get(R"(/frames/([^/]+)/thumbnail)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        if (!e) return error(res, 503, "index not loaded");
        const FrameId id(req.matches[1]);
        const auto* f = e->corpus().find(id);
        if (!f) return error(res, 404, "unknown frame '" + id.str() + "'");
        try {
            auto thumb = thumbnails_.get(id, e->corpus().absolute_image_path(*f));
            res.status = 200;
            res.set_header("Cache-Control", "max-age=86400");
            res.set_content(std::move(thumb.bytes), thumb.content_type);
        } catch (const ImageReadError& ex) {
            error(res, 404, ex.what());
        }
    });

    s.Get(R"(/frames/([^/]+)/context)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        if (!e) return error(res, 503, "index not loaded");
        const FrameId id(req.matches[1]);
        if (!e->corpus().contains(id)) return error(res, 404, "unknown frame '" + id.str() + "'");
        std::size_t n = 4;
        if (req.has_param("n")) {
            const auto raw = req.get_param_value("n");
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), n);
            if (ec != std::errc() || p != raw.data() + raw.size() || n > 100) {
                return error(res, 400, "'n' must be an integer in [0, 100]");
            }
        }
        json frames = json::array();
        for (const auto& f : e->corpus().neighbors(id, n)) {
            auto row = frame_json(*e, f);
            row["center"] = f == id;
            frames.push_back(std::move(row));
        }
        reply(res, 200, json{{"frameId", id.str()}, {"n", n}, {"frames", std::move(frames)}});
    });
}

}  // namespace lifelog::app
