#include "lifelog/app/http_clients.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>
#include <openssl/evp.h>

#include "lifelog/mock_clients.hpp"

namespace lifelog::app {

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string read_image_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageReadError("cannot read image " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in && !in.eof()) throw ImageReadError("read failed for image " + path.string());
    return buf.str();
}

JsonEndpoint::JsonEndpoint(const ClientConfig& config) : config_(config) {
    const auto scheme_end = config.url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("client url must start with http:// or https://: " + config.url);
    const auto path_start = config.url.find('/', scheme_end + 3);
    origin_ = config.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config.url.substr(path_start);
}

nlohmann::json JsonEndpoint::post(const nlohmann::json& body) const {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError(fmt::format("{}{}: {}", origin_, path_, httplib::to_string(res.error())));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportError(fmt::format("{}{}: HTTP {}", origin_, path_, res->status));
    }
    if (res->status < 200 || res->status >= 300) {
        throw std::runtime_error(fmt::format("{}{}: HTTP {}: {}", origin_, path_, res->status, res->body.substr(0, 200)));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(fmt::format("{}{}: response is not JSON: {}", origin_, path_, e.what()));
    }
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw std::runtime_error(fmt::format("response lacks '{}'", key));
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error(fmt::format("response field '{}' has the wrong type", key));
    }
}

std::vector<float> embedding(const nlohmann::json& j, std::size_t dimension) {
    auto v = field<std::vector<float>>(j, "embedding");
    if (v.size() != dimension) {
        throw std::runtime_error(fmt::format("embedding has {} values, configured dimension is {}", v.size(), dimension));
    }
    return v;
}

}  // namespace

std::string HttpCaptioner::describe_image(const std::string& prompt, const ImageRef& image) {
    return describe_frames(prompt, std::span(&image, 1), ResponseFormat::Text);
}

std::string HttpCaptioner::describe_frames(const std::string& prompt, std::span<const ImageRef> images,
                                           ResponseFormat format) {
    nlohmann::json body{{"model", endpoint_.config().model},
                        {"prompt", prompt},
                        {"images", nlohmann::json::array()},
                        {"max_tokens", endpoint_.config().max_tokens},
                        {"response_format", format == ResponseFormat::Json ? "json" : "text"}};
    for (const auto& img : images) body["images"].push_back(base64_encode(read_image_bytes(img.path)));
    return field<std::string>(endpoint_.post(body), "text");
}

std::vector<float> HttpVisionEmbedder::embed_image(const ImageRef& image) {
    const nlohmann::json body{{"model", endpoint_.config().model}, {"image", base64_encode(read_image_bytes(image.path))}};
    return embedding(endpoint_.post(body), dimension());
}

std::vector<float> HttpTextEmbedder::embed_text(const std::string& text) {
    const nlohmann::json body{{"model", endpoint_.config().model}, {"input", text}};
    return embedding(endpoint_.post(body), dimension());
}

std::vector<CaptionId> HttpReranker::rerank(const std::string& topic_description,
                                            std::span<const RerankCandidate> candidates, std::size_t out_count) {
    nlohmann::json body{{"model", endpoint_.config().model},
                        {"topic", topic_description},
                        {"candidates", nlohmann::json::array()},
                        {"k", out_count}};
    for (const auto& c : candidates) body["candidates"].push_back({{"id", c.id.str()}, {"text", c.text}});
    std::vector<CaptionId> out;
    for (auto& id : field<std::vector<std::string>>(endpoint_.post(body), "ranking")) out.emplace_back(std::move(id));
    return out;
}

namespace {

void require_dimension(const ClientConfig& c, const char* name) {
    if (c.dimension == 0) throw ConfigError(fmt::format("{}.dimension is required for the http backend", name));
}

}  // namespace

std::unique_ptr<CaptionerClient> make_captioner(const ClientConfig& c) {
    if (c.backend == "http") return std::make_unique<HttpCaptioner>(c);
    return std::make_unique<MockCaptioner>(c.seed ? c.seed : 7);
}

std::unique_ptr<VisionEmbedderClient> make_vision_embedder(const ClientConfig& c) {
    if (c.backend == "http") {
        require_dimension(c, "vision_embedder");
        return std::make_unique<HttpVisionEmbedder>(c);
    }
    return std::make_unique<MockVisionEmbedder>(c.dimension ? c.dimension : 64, c.seed ? c.seed : 13);
}

std::unique_ptr<TextEmbedderClient> make_text_embedder(const ClientConfig& c) {
    if (c.backend == "http") {
        require_dimension(c, "text_embedder");
        return std::make_unique<HttpTextEmbedder>(c);
    }
    return std::make_unique<MockTextEmbedder>(c.dimension ? c.dimension : 256, c.seed ? c.seed : 11);
}

std::unique_ptr<RerankerClient> make_reranker(const ClientConfig& c) {
    if (c.backend == "http") return std::make_unique<HttpReranker>(c);
    return std::make_unique<IdentityReranker>();
}

}  // namespace lifelog::app
