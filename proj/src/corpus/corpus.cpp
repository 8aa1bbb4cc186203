#include "lifelog/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lifelog {

using nlohmann::json;

Corpus::Corpus(std::filesystem::path root, std::vector<VideoSegment> segments,
               std::vector<Frame> frames)
    : root_(std::move(root)), segments_(std::move(segments)) {
    std::unordered_map<FrameId, Frame> pool;
    pool.reserve(frames.size());
    for (auto& f : frames) {
        if (f.id.empty()) throw CorpusError("frame with empty id");
        auto id = f.id;
        if (!pool.emplace(id, std::move(f)).second) {
            throw CorpusError("duplicate frame id '" + id.str() + "'");
        }
    }
    frames_.reserve(pool.size());
    for (std::size_t s = 0; s < segments_.size(); ++s) {
        const auto& seg = segments_[s];
        if (seg.frames.empty()) throw CorpusError("segment '" + seg.id.str() + "' is empty");
        if (!segment_by_id_.emplace(seg.id, s).second) {
            throw CorpusError("duplicate segment id '" + seg.id.str() + "'");
        }
        for (std::size_t i = 0; i < seg.frames.size(); ++i) {
            auto it = pool.find(seg.frames[i]);
            if (it == pool.end()) {
                throw CorpusError("segment '" + seg.id.str() + "' references unknown or already "
                                  "assigned frame '" + seg.frames[i].str() + "'");
            }
            Frame f = std::move(it->second);
            pool.erase(it);
            if (f.segment != seg.id || f.index_in_segment != i) {
                throw CorpusError("frame '" + f.id.str() + "' has inconsistent segment/index");
            }
            if (i > 0 && f.timestamp < frames_.back().timestamp) {
                throw CorpusError("segment '" + seg.id.str() + "': timestamp decreases at index " +
                                  std::to_string(i) + " (frame '" + f.id.str() + "')");
            }
            by_id_.emplace(f.id, frames_.size());
            frames_.push_back(std::move(f));
        }
    }
    if (!pool.empty()) {
        throw CorpusError("frame '" + pool.begin()->first.str() + "' belongs to no segment");
    }
}

const Frame& Corpus::frame(const FrameId& id) const {
    const Frame* f = find(id);
    if (f == nullptr) throw CorpusError("unknown frame id '" + id.str() + "'");
    return *f;
}

const Frame* Corpus::find(const FrameId& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &frames_[it->second];
}

const VideoSegment& Corpus::segment(const SegmentId& id) const {
    auto it = segment_by_id_.find(id);
    if (it == segment_by_id_.end()) throw CorpusError("unknown segment id '" + id.str() + "'");
    return segments_[it->second];
}

std::filesystem::path Corpus::absolute_image_path(const Frame& frame) const {
    if (frame.image_path.is_absolute()) return frame.image_path;
    return root_ / frame.image_path;
}

ImageRef Corpus::image(const FrameId& id) const {
    const Frame& f = frame(id);
    return ImageRef{f.id, absolute_image_path(f)};
}

std::vector<FrameId> Corpus::neighbors(const FrameId& id, std::size_t n) const {
    const Frame& f = frame(id);
    const auto& seg = segment(f.segment);
    const std::size_t lo = f.index_in_segment >= n ? f.index_in_segment - n : 0;
    const std::size_t hi = std::min(seg.frames.size(), f.index_in_segment + n + 1);
    return {seg.frames.begin() + static_cast<std::ptrdiff_t>(lo),
            seg.frames.begin() + static_cast<std::ptrdiff_t>(hi)};
}

namespace {

struct Row {
    std::size_t line = 0;
    Frame frame;
    std::optional<std::size_t> index;
};

std::string required_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw CorpusError("manifest line " + std::to_string(line) + ": missing string field '" +
                          key + "'");
    }
    auto value = it->get<std::string>();
    if (value.empty()) {
        throw CorpusError("manifest line " + std::to_string(line) + ": field '" + key +
                          "' is empty");
    }
    return value;
}

Row parse_row(const std::string& text, std::size_t line) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorpusError("manifest line " + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) {
        throw CorpusError("manifest line " + std::to_string(line) + ": expected a JSON object");
    }
    Row row;
    row.line = line;
    row.frame.id = FrameId(required_string(obj, "id", line));
    const auto ts = required_string(obj, "timestamp", line);
    try {
        row.frame.timestamp = Timestamp::parse(ts);
    } catch (const TimestampError& e) {
        throw CorpusError("manifest line " + std::to_string(line) + ": " + e.what());
    }
    row.frame.image_path = required_string(obj, "image", line);
    if (auto it = obj.find("segment"); it != obj.end() && !it->is_null()) {
        row.frame.segment = SegmentId(required_string(obj, "segment", line));
    } else {
        row.frame.segment = SegmentId(row.frame.timestamp.local_date());
    }
    if (auto it = obj.find("index"); it != obj.end() && !it->is_null()) {
        if (!it->is_number_unsigned()) {
            throw CorpusError("manifest line " + std::to_string(line) +
                              ": 'index' must be a non-negative integer");
        }
        row.index = it->get<std::size_t>();
    }
    return row;
}

}  // namespace

IngestResult ingest_manifest_text(const std::string& text, const std::filesystem::path& root) {
    std::vector<Row> rows;
    std::unordered_map<FrameId, std::size_t> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Row row = parse_row(line, lineno);
        if (auto [it, fresh] = seen.emplace(row.frame.id, lineno); !fresh) {
            throw CorpusError("duplicate frame id '" + row.frame.id.str() + "' at manifest line " +
                              std::to_string(lineno) + " (first seen at line " +
                              std::to_string(it->second) + ")");
        }
        rows.push_back(std::move(row));
    }

    std::map<SegmentId, std::vector<Row>> by_segment;
    for (auto& r : rows) by_segment[r.frame.segment].push_back(std::move(r));

    IngestResult result;
    std::vector<VideoSegment> segments;
    std::vector<Frame> frames;
    frames.reserve(rows.size());
    for (auto& [seg_id, seg_rows] : by_segment) {
        const auto with_index = std::count_if(seg_rows.begin(), seg_rows.end(),
                                              [](const Row& r) { return r.index.has_value(); });
        if (with_index != 0 && static_cast<std::size_t>(with_index) != seg_rows.size()) {
            throw CorpusError("segment '" + seg_id.str() +
                              "': 'index' must be given for all frames or none");
        }
        if (with_index != 0) {
            std::sort(seg_rows.begin(), seg_rows.end(),
                      [](const Row& a, const Row& b) { return *a.index < *b.index; });
            for (std::size_t i = 1; i < seg_rows.size(); ++i) {
                if (*seg_rows[i].index == *seg_rows[i - 1].index) {
                    throw CorpusError("segment '" + seg_id.str() + "': index " +
                                      std::to_string(*seg_rows[i].index) + " used twice (lines " +
                                      std::to_string(seg_rows[i - 1].line) + ", " +
                                      std::to_string(seg_rows[i].line) + ")");
                }
                if (seg_rows[i].frame.timestamp < seg_rows[i - 1].frame.timestamp) {
                    throw CorpusError("segment '" + seg_id.str() + "': non-monotone timestamp at "
                                      "frame '" + seg_rows[i].frame.id.str() + "' (manifest line " +
                                      std::to_string(seg_rows[i].line) + ", index " +
                                      std::to_string(*seg_rows[i].index) + ")");
                }
            }
        } else {
            std::sort(seg_rows.begin(), seg_rows.end(), [](const Row& a, const Row& b) {
                if (a.frame.timestamp != b.frame.timestamp) return a.frame.timestamp < b.frame.timestamp;
                return a.frame.id < b.frame.id;
            });
        }
        VideoSegment seg{seg_id, {}};
        for (std::size_t i = 0; i < seg_rows.size(); ++i) {
            Frame f = std::move(seg_rows[i].frame);
            f.index_in_segment = i;
            const auto path = f.image_path.is_absolute() ? f.image_path : root / f.image_path;
            std::error_code ec;
            if (!std::filesystem::exists(path, ec)) {
                result.warnings.push_back(
                    {seg_rows[i].line, f.id, "image file not found: " + path.string()});
            }
            seg.frames.push_back(f.id);
            frames.push_back(std::move(f));
        }
        segments.push_back(std::move(seg));
    }

    // Chronological segment order: first frame time, then id.
    std::unordered_map<FrameId, Timestamp> first_ts;
    for (const auto& f : frames) first_ts.emplace(f.id, f.timestamp);
    std::sort(segments.begin(), segments.end(), [&](const VideoSegment& a, const VideoSegment& b) {
        const auto& ta = first_ts.at(a.frames.front());
        const auto& tb = first_ts.at(b.frames.front());
        if (ta != tb) return ta < tb;
        return a.id < b.id;
    });
    std::sort(result.warnings.begin(), result.warnings.end(),
              [](const IngestWarning& a, const IngestWarning& b) { return a.line < b.line; });

    result.corpus = Corpus(root, std::move(segments), std::move(frames));
    return result;
}

IngestResult ingest_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw CorpusError("cannot open manifest " + manifest_path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest_manifest_text(buf.str(), manifest_path.parent_path());
}

void write_manifest(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError("cannot write manifest " + path.string());
    for (const auto& f : corpus.frames()) {
        json row = {{"id", f.id.str()},
                    {"segment", f.segment.str()},
                    {"index", f.index_in_segment},
                    {"timestamp", f.timestamp.iso()},
                    {"image", f.image_path.generic_string()}};
        out << row.dump() << '\n';
    }
}

std::vector<Window> window_frames(const Corpus& corpus, std::size_t window_size) {
    if (window_size == 0) throw std::invalid_argument("window_frames: window size must be >= 1");
    std::vector<Window> windows;
    for (const auto& seg : corpus.segments()) {
        std::size_t ordinal = 0;
        for (std::size_t start = 0; start < seg.frames.size(); start += window_size, ++ordinal) {
            const std::size_t stop = std::min(seg.frames.size(), start + window_size);
            Window w;
            w.segment = seg.id;
            w.index_in_segment = ordinal;
            w.frames.assign(seg.frames.begin() + static_cast<std::ptrdiff_t>(start),
                            seg.frames.begin() + static_cast<std::ptrdiff_t>(stop));
            w.start = corpus.frame(w.frames.front()).timestamp;
            w.end = corpus.frame(w.frames.back()).timestamp;
            windows.push_back(std::move(w));
        }
    }
    return windows;
}

}  // namespace lifelog
