#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lifelog/captions.hpp"
#include "lifelog/clients.hpp"
#include "lifelog/corpus.hpp"

namespace lifelog {

/// Prepended to every caption (and, by default, every query) before embedding.
inline constexpr std::string_view kExperiencePrefix = "The individual’s experience: ";

/// Prepends kExperiencePrefix unless `text` already starts with it.
std::string with_experience_prefix(std::string_view text);

/// Unit vector for `prefix + caption.text`. Throws std::invalid_argument for
/// empty text; client errors propagate after retries.
std::vector<float> embed_caption(TextEmbedderClient& client, const Caption& caption,
                                 const RetryPolicy& retry = {});

/// Unit vector for a user query; `prefix` controls the experience prefix.
/// Any client failure propagates.
std::vector<float> embed_query(TextEmbedderClient& client, std::string_view text, bool prefix = true,
                               const RetryPolicy& retry = {});

struct RankedCaption {
    CaptionId id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based

    friend bool operator==(const RankedCaption&, const RankedCaption&) = default;
};

/// Granularities embedded by default (Summary is not).
std::set<CaptionGranularity> default_index_granularities();

/// Immutable-after-build exact index over unit caption vectors.
class CaptionIndex {
public:
    CaptionIndex() = default;
    CaptionIndex(std::string embedder_name, std::size_t dimension)
        : embedder_(std::move(embedder_name)), dim_(dimension) {}

    /// `vector` must be unit length (within 1e-3) and of index dimension;
    /// `earliest` is the time of the caption's first frame, used for ties.
    void add(Caption caption, std::span<const float> vector, std::optional<Timestamp> earliest);

    std::size_t size() const noexcept { return captions_.size(); }
    bool empty() const noexcept { return captions_.empty(); }
    std::size_t dimension() const noexcept { return dim_; }
    const std::string& embedder_name() const noexcept { return embedder_; }

    const Caption& caption(std::size_t row) const { return captions_.at(row); }
    const Caption* find(const CaptionId& id) const;
    std::optional<std::size_t> row_of(const CaptionId& id) const;
    std::span<const float> vector(std::size_t row) const;
    std::optional<Timestamp> earliest(std::size_t row) const { return earliest_.at(row); }
    std::set<CaptionGranularity> granularities() const;

    /// Raw score of every entry in row order: dot(query, entry).
    std::vector<float> scores(std::span<const float> query) const;

    /// Top-n by dot product (exact scan). Ties: earliest frame time, then
    /// caption id. n larger than the index returns everything. Throws
    /// std::invalid_argument on dimension mismatch.
    std::vector<RankedCaption> search(std::span<const float> query, std::size_t n) const;

    /// Writes `<stem>.vemb` and `<stem>.json`.
    void save(const std::filesystem::path& stem) const;
    static CaptionIndex load(const std::filesystem::path& stem);

private:
    std::string embedder_;
    std::size_t dim_ = 0;
    std::vector<Caption> captions_;
    std::vector<std::optional<Timestamp>> earliest_;
    std::vector<float> vectors_;
    std::unordered_map<CaptionId, std::size_t> rows_;
};

struct BuildIndexResult {
    CaptionIndex index;
    std::vector<std::string> warnings;  // captions excluded after client failures
};

/// Embeds the captions whose granularity is in `granularities`. With a
/// corpus, records each caption's earliest frame time for tie-breaking.
/// Throws std::invalid_argument for an empty filter or invalid captions, and
/// std::runtime_error when the embedder returns mixed dimensions.
BuildIndexResult build_index(std::span<const Caption> captions, TextEmbedderClient& client,
                             const std::set<CaptionGranularity>& granularities,
                             const Corpus* corpus = nullptr, const RetryPolicy& retry = {},
                             std::size_t parallelism = 1);

}  // namespace lifelog
