#pragma once

// Interfaces to the external model services. Every implementation must be
// safe to call from several threads at once.

#include <chrono>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lifelog/corpus.hpp"
#include "lifelog/ids.hpp"

namespace lifelog {

/// Transient failure talking to a model service; retried by with_retry.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The image bytes could not be read. Never retried.
class ImageReadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CaptionerCapabilities {
    bool single_image = true;
    bool multi_image = false;
    bool structured_output = false;
};

enum class ResponseFormat { Text, Json };

class CaptionerClient {
public:
    virtual ~CaptionerClient() = default;
    virtual std::string describe_image(const std::string& prompt, const ImageRef& image) = 0;
    virtual std::string describe_frames(const std::string& prompt, std::span<const ImageRef> images,
                                        ResponseFormat format) = 0;
    virtual CaptionerCapabilities capabilities() const = 0;
    virtual std::string model_name() const = 0;
};

class VisionEmbedderClient {
public:
    virtual ~VisionEmbedderClient() = default;
    /// Raw (unnormalized) embedding of length dimension().
    virtual std::vector<float> embed_image(const ImageRef& image) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string model_name() const = 0;
};

class TextEmbedderClient {
public:
    virtual ~TextEmbedderClient() = default;
    /// Raw (unnormalized) embedding of length dimension().
    virtual std::vector<float> embed_text(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string model_name() const = 0;
};

struct RerankCandidate {
    CaptionId id;
    std::string text;
};

class RerankerClient {
public:
    virtual ~RerankerClient() = default;
    /// Returns up to out_count candidate ids, best first. Implementations may
    /// misbehave (unknown ids, duplicates); callers validate.
    virtual std::vector<CaptionId> rerank(const std::string& topic_description,
                                          std::span<const RerankCandidate> candidates,
                                          std::size_t out_count) = 0;
    virtual std::string model_name() const = 0;
};

/// Exponential backoff: attempt k (1-based) waits initial_backoff * multiplier^(k-1)
/// before attempt k+1.
struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };

    static RetryPolicy no_wait(int attempts = 3) {
        RetryPolicy p;
        p.max_attempts = attempts;
        p.initial_backoff = std::chrono::milliseconds{0};
        p.sleep = [](std::chrono::milliseconds) {};
        return p;
    }
};

/// Calls fn, retrying on TransportError up to policy.max_attempts times in
/// total. The last TransportError propagates; other exceptions pass through
/// immediately.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    auto delay = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError&) {
            if (attempt >= policy.max_attempts) throw;
        }
        if (policy.sleep && delay.count() > 0) policy.sleep(delay);
        delay = std::chrono::milliseconds{
            static_cast<long long>(std::llround(static_cast<double>(delay.count()) * policy.multiplier))};
    }
}

}  // namespace lifelog
