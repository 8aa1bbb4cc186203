#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lifelog/corpus.hpp"
#include "lifelog/ids.hpp"

namespace lifelog {

enum class CaptionGranularity { Single, Collective, FineGrained, CoarseGrained, Summary };

std::string_view to_string(CaptionGranularity g);
/// Accepts the store spelling (`single`, `collective`, `fine_grained`,
/// `coarse_grained`, `summary`) and the short channel names `fine`/`coarse`.
CaptionGranularity parse_granularity(std::string_view name);

struct Caption {
    CaptionId id;
    std::string text;
    CaptionGranularity granularity = CaptionGranularity::Single;
    std::vector<FrameId> frame_ids;
    std::string model;
    std::string generated_at;  // ISO 8601, UTC
    std::optional<std::string> batch_id;

    friend bool operator==(const Caption&, const Caption&) = default;
};

class CaptionStoreError : public std::runtime_error {
public:
    CaptionStoreError(std::size_t line, const std::string& message)
        : std::runtime_error(line == 0 ? message
                                       : "caption store line " + std::to_string(line) + ": " + message),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Checks the per-caption invariants: non-empty id and text, Single and
/// FineGrained cover exactly one frame, other granularities at least one, no
/// repeated frame. With a corpus, frames must exist and be chronological.
/// Returns an empty string when valid, otherwise the first violation.
std::string validate_caption(const Caption& caption, const Corpus* corpus = nullptr);

std::string caption_to_json_line(const Caption& caption);
/// Throws CaptionStoreError (line 0) on schema violations.
Caption caption_from_json_line(std::string_view line);

void save_captions(const std::filesystem::path& path, const std::vector<Caption>& captions);
/// Loads and validates every line; errors carry 1-based line numbers. Caption
/// ids must be unique within the file.
std::vector<Caption> load_captions(const std::filesystem::path& path, const Corpus* corpus = nullptr);

/// Single appender for a caption store; each append is flushed as one line.
class CaptionStoreWriter {
public:
    CaptionStoreWriter(const std::filesystem::path& path, bool truncate);
    void append(const Caption& caption);

private:
    std::mutex mutex_;
    std::ofstream out_;
};

/// Number of whitespace-separated words.
std::size_t word_count(std::string_view text);

}  // namespace lifelog
