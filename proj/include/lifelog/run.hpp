#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lifelog/ids.hpp"

namespace lifelog {

struct ScoredFrame {
    FrameId frame;
    double score = 0.0;
    std::vector<CaptionId> provenance;  // captions that produced the score

    friend bool operator==(const ScoredFrame&, const ScoredFrame&) = default;
};

/// Ranked frames for one topic: no duplicates, scores non-increasing,
/// at most k entries.
struct RetrievalRun {
    std::string topic;
    std::string method;
    std::vector<ScoredFrame> frames;
    std::size_t k = 0;

    friend bool operator==(const RetrievalRun&, const RetrievalRun&) = default;
};

class RunFormatError : public std::runtime_error {
public:
    RunFormatError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// TREC run lines, `topic Q0 frame rank score method`, ranks from 1 and
/// scores with six decimals.
void write_trec_run(std::ostream& out, const RetrievalRun& run);
void write_trec_runs(const std::filesystem::path& path, std::span<const RetrievalRun> runs);
std::string format_trec_run(const RetrievalRun& run);

/// Groups lines by (topic, method) in order of first appearance; k is the
/// number of lines read. Rejects malformed lines, ranks that do not count up
/// from 1, and repeated frames within a run. Provenance is not stored in the
/// format and comes back empty.
std::vector<RetrievalRun> parse_trec_runs(std::string_view text);
std::vector<RetrievalRun> load_trec_runs(const std::filesystem::path& path);

}  // namespace lifelog
