#pragma once

// JSON-over-HTTP implementations of the model client interfaces, and
// factories that pick mock or http backends from configuration.
//
// Wire format (POST, JSON body, optional `Authorization: Bearer <key>`):
//   captioner        {model, prompt, images: [base64], max_tokens, response_format} -> {text}
//   vision embedder  {model, image: base64}                                        -> {embedding: [f32]}
//   text embedder    {model, input}                                                -> {embedding: [f32]}
//   reranker         {model, topic, candidates: [{id, text}], k}                   -> {ranking: [id]}
// Connection failures and 429/5xx answers raise TransportError (retried);
// other non-2xx answers and malformed bodies raise std::runtime_error.

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "lifelog/app/config.hpp"
#include "lifelog/clients.hpp"

namespace lifelog::app {

std::string base64_encode(std::string_view bytes);

/// Reads a whole image file; throws ImageReadError.
std::string read_image_bytes(const std::filesystem::path& path);

/// POSTs `body` to the configured url and returns the parsed JSON answer.
class JsonEndpoint {
public:
    explicit JsonEndpoint(const ClientConfig& config);
    nlohmann::json post(const nlohmann::json& body) const;
    const ClientConfig& config() const { return config_; }

private:
    ClientConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;
};

class HttpCaptioner final : public CaptionerClient {
public:
    explicit HttpCaptioner(const ClientConfig& config) : endpoint_(config) {}
    std::string describe_image(const std::string& prompt, const ImageRef& image) override;
    std::string describe_frames(const std::string& prompt, std::span<const ImageRef> images,
                                ResponseFormat format) override;
    CaptionerCapabilities capabilities() const override { return {true, true, true}; }
    std::string model_name() const override { return endpoint_.config().model; }

private:
    JsonEndpoint endpoint_;
};

class HttpVisionEmbedder final : public VisionEmbedderClient {
public:
    explicit HttpVisionEmbedder(const ClientConfig& config) : endpoint_(config) {}
    std::vector<float> embed_image(const ImageRef& image) override;
    std::size_t dimension() const override { return endpoint_.config().dimension; }
    std::string model_name() const override { return endpoint_.config().model; }

private:
    JsonEndpoint endpoint_;
};

class HttpTextEmbedder final : public TextEmbedderClient {
public:
    explicit HttpTextEmbedder(const ClientConfig& config) : endpoint_(config) {}
    std::vector<float> embed_text(const std::string& text) override;
    std::size_t dimension() const override { return endpoint_.config().dimension; }
    std::string model_name() const override { return endpoint_.config().model; }

private:
    JsonEndpoint endpoint_;
};

class HttpReranker final : public RerankerClient {
public:
    explicit HttpReranker(const ClientConfig& config) : endpoint_(config) {}
    std::vector<CaptionId> rerank(const std::string& topic_description, std::span<const RerankCandidate> candidates,
                                  std::size_t out_count) override;
    std::string model_name() const override { return endpoint_.config().model; }

private:
    JsonEndpoint endpoint_;
};

/// Throws ConfigError for an http embedder without a dimension.
std::unique_ptr<CaptionerClient> make_captioner(const ClientConfig& config);
std::unique_ptr<VisionEmbedderClient> make_vision_embedder(const ClientConfig& config);
std::unique_ptr<TextEmbedderClient> make_text_embedder(const ClientConfig& config);
std::unique_ptr<RerankerClient> make_reranker(const ClientConfig& config);

}  // namespace lifelog::app
