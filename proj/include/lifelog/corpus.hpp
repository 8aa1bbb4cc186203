#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lifelog/ids.hpp"
#include "lifelog/timestamp.hpp"

namespace lifelog {

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Frame {
    FrameId id;
    SegmentId segment;
    std::size_t index_in_segment = 0;
    Timestamp timestamp;
    std::filesystem::path image_path;  // relative to the corpus root

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct VideoSegment {
    SegmentId id;
    std::vector<FrameId> frames;  // chronological

    friend bool operator==(const VideoSegment&, const VideoSegment&) = default;
};

/// A run of consecutive frames of one segment.
struct Window {
    SegmentId segment;
    std::size_t index_in_segment = 0;  // ordinal of this window within its segment
    std::vector<FrameId> frames;
    Timestamp start;
    Timestamp end;

    friend bool operator==(const Window&, const Window&) = default;
};

/// Image handed to a model client: the frame it belongs to and where its bytes
/// live on disk.
struct ImageRef {
    FrameId frame;
    std::filesystem::path path;
};

/// Immutable, validated set of day segments. Safe to share across threads
/// once built.
class Corpus {
public:
    Corpus() = default;

    /// Validates and takes ownership. `frames` must carry consistent segment
    /// and index_in_segment fields; throws CorpusError otherwise.
    Corpus(std::filesystem::path root, std::vector<VideoSegment> segments, std::vector<Frame> frames);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::span<const VideoSegment> segments() const noexcept { return segments_; }
    std::size_t frame_count() const noexcept { return frames_.size(); }

    bool contains(const FrameId& id) const { return by_id_.contains(id); }
    /// Throws CorpusError for unknown ids.
    const Frame& frame(const FrameId& id) const;
    const Frame* find(const FrameId& id) const;
    const VideoSegment& segment(const SegmentId& id) const;

    /// Frames in corpus order (segment order, then index within segment).
    std::span<const Frame> frames() const noexcept { return frames_; }

    ImageRef image(const FrameId& id) const;
    std::filesystem::path absolute_image_path(const Frame& frame) const;

    /// Up to n frames on each side of `id` within its segment, in time order,
    /// including `id` itself.
    std::vector<FrameId> neighbors(const FrameId& id, std::size_t n) const;

    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.segments_ == b.segments_ && a.frames_ == b.frames_;
    }

private:
    std::filesystem::path root_;
    std::vector<VideoSegment> segments_;
    std::vector<Frame> frames_;
    std::unordered_map<FrameId, std::size_t> by_id_;
    std::unordered_map<SegmentId, std::size_t> segment_by_id_;
};

struct IngestWarning {
    std::size_t line = 0;
    FrameId frame;
    std::string message;
};

struct IngestResult {
    Corpus corpus;
    std::vector<IngestWarning> warnings;
};

/// Reads a JSON Lines manifest: one `{"id", "segment", "timestamp", "image"}`
/// object per frame, in any order. `segment` may be omitted, in which case the
/// frame's local calendar date is used. An optional integer `index` pins the
/// frame's position in its segment; timestamps must then be non-decreasing in
/// index order.
///
/// Image paths are resolved against the manifest's directory. A missing image
/// produces a warning; the frame is kept. Duplicate ids, unparsable rows and
/// non-monotone timestamps throw CorpusError naming the offending id/line.
IngestResult ingest_manifest(const std::filesystem::path& manifest_path);

/// Same as ingest_manifest but over in-memory text; `root` resolves images.
IngestResult ingest_manifest_text(const std::string& text, const std::filesystem::path& root);

/// Writes the canonical manifest (sorted, with explicit `index`).
void write_manifest(const Corpus& corpus, const std::filesystem::path& path);

/// Splits every segment into consecutive non-overlapping windows of
/// `window_size` frames. The last window of a segment may be shorter; windows
/// never span segments. Throws std::invalid_argument for window_size == 0.
std::vector<Window> window_frames(const Corpus& corpus, std::size_t window_size);

}  // namespace lifelog
