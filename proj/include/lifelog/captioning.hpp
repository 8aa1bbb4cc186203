#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lifelog/captions.hpp"
#include "lifelog/clients.hpp"
#include "lifelog/corpus.hpp"

namespace lifelog {

struct WordRange {
    std::size_t min = 0;
    std::size_t max = 0;
};

inline constexpr WordRange kSingleWords{20, 40};
inline constexpr WordRange kCollectiveWords{40, 60};
inline constexpr WordRange kSummaryWords{20, 40};

/// Prompt templates with `{name}` placeholders.
///
/// single:     {date} {time} {min_words} {max_words}
/// collective: {date} {start_time} {end_time} {frame_count} {min_words} {max_words}
/// merged:     {frame_count} {frame_list} {previous_summary} {summary_min_words}
///             {summary_max_words}
struct PromptTemplates {
    std::string single;
    std::string collective;
    std::string merged;
    /// Appended to the merged prompt when its first answer was rejected.
    /// {diagnostic}
    std::string merged_retry;

    static PromptTemplates defaults();
    /// Loads `single.txt`, `collective.txt`, `merged.txt`, `merged_retry.txt`
    /// from `dir`; missing files keep the default.
    static PromptTemplates load(const std::filesystem::path& dir);
};

/// Replaces every `{key}` in `tmpl`. Unknown placeholders are left untouched.
std::string render_template(std::string_view tmpl,
                            std::span<const std::pair<std::string, std::string>> values);

std::string build_single_prompt(const Frame& frame, const PromptTemplates& templates = PromptTemplates::defaults());
std::string build_collective_prompt(const Window& window, const PromptTemplates& templates = PromptTemplates::defaults());
/// `previous_summary` is inserted verbatim; an empty summary renders as "(none)".
std::string build_merged_prompt(std::span<const Frame> batch, const std::string& previous_summary,
                                const PromptTemplates& templates = PromptTemplates::defaults());

// ---------------------------------------------------------------------------
// Structured output of the merged method.

struct CoarseGroup {
    std::vector<FrameId> frames;
    std::string text;

    friend bool operator==(const CoarseGroup&, const CoarseGroup&) = default;
};

struct MergedBatchOutput {
    std::vector<std::pair<FrameId, std::string>> fine_grained;  // batch order
    std::string summary;
    std::vector<CoarseGroup> coarse_groups;  // ordered by first frame

    friend bool operator==(const MergedBatchOutput&, const MergedBatchOutput&) = default;
};

enum class MergedOutputErrorKind {
    Malformed,           // not JSON, wrong types, empty text
    MissingSection,      // fine_grained / summary / groups absent
    IndexOutOfRange,     // image_N with N outside 1..batch size
    NonContiguousGroup,  // a group is not a consecutive run
    Coverage,            // a frame missing or repeated
};

std::string_view to_string(MergedOutputErrorKind kind);

class MergedOutputError : public std::runtime_error {
public:
    MergedOutputError(MergedOutputErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}
    MergedOutputErrorKind kind() const noexcept { return kind_; }

private:
    MergedOutputErrorKind kind_;
};

/// Strict parse of one merged-batch answer:
///
///     {"fine_grained": [{"image": "image_1", "caption": "..."}, ...],
///      "summary": "...",
///      "groups": [{"images": ["image_1", "image_2"], "caption": "..."}, ...]}
///
/// `fine_grained` may also be an object keyed by image name. `image_N` refers
/// to batch[N-1]. A single surrounding Markdown code fence is tolerated.
/// Throws MergedOutputError.
MergedBatchOutput parse_merged_output(std::string_view raw, std::span<const FrameId> batch);

/// Fallback used when a batch cannot be parsed: every frame its own group,
/// all texts empty.
MergedBatchOutput degenerate_merged_output(std::span<const FrameId> batch);

// ---------------------------------------------------------------------------
// Caption jobs.

struct CaptionJobOptions {
    PromptTemplates templates = PromptTemplates::defaults();
    RetryPolicy retry;
    std::size_t parallelism = 1;
    /// Supplies `generated_at`. Fix it for reproducible stores.
    std::function<std::string()> clock;
    /// Prefix for merged batch ids.
    std::string batch_prefix = "merged";
    /// Resolves relative image paths of frames passed to caption_merged.
    std::filesystem::path image_root;
};

/// A frame, window or batch the client could not caption.
struct CaptionFailure {
    std::vector<FrameId> frames;
    std::string reason;
};

struct CaptionRun {
    std::vector<Caption> captions;
    std::vector<CaptionFailure> failures;
    std::vector<std::string> warnings;
};

struct MergedCaptionRun {
    std::vector<Caption> captions;
    std::string final_summary;
    /// Batch ids that fell back to degenerate output.
    std::vector<std::string> flagged_batches;
    std::vector<CaptionFailure> failures;
    std::vector<std::string> warnings;
    /// Prompt sent for each batch (first attempt), in batch order.
    std::vector<std::string> prompts;
};

std::string utc_now_iso();

/// One Single caption per frame, in corpus order.
CaptionRun caption_single(CaptionerClient& client, const Corpus& corpus,
                          const CaptionJobOptions& options = {});

/// One Collective caption per window.
CaptionRun caption_collective(CaptionerClient& client, const Corpus& corpus,
                              std::span<const Window> windows, const CaptionJobOptions& options = {});

/// Consecutive batches of `batch_size` filtered frames; each prompt carries
/// the previous batch's summary. Unparsable answers get one re-prompt, then
/// the batch falls back to degenerate output and is flagged. Batches run
/// strictly in order.
MergedCaptionRun caption_merged(CaptionerClient& client, std::span<const Frame> filtered_frames,
                                std::size_t batch_size,
                                const std::optional<std::string>& initial_summary = std::nullopt,
                                const CaptionJobOptions& options = {});

}  // namespace lifelog
