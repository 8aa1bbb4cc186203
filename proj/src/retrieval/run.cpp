#include "lifelog/run.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace lifelog {

RunFormatError::RunFormatError(std::size_t line, const std::string& message)
    : std::runtime_error("run file line " + std::to_string(line) + ": " + message), line_(line) {}

void write_trec_run(std::ostream& out, const RetrievalRun& run) {
    out << format_trec_run(run);
}

std::string format_trec_run(const RetrievalRun& run) {
    std::string out;
    for (std::size_t i = 0; i < run.frames.size(); ++i) {
        out += fmt::format("{} Q0 {} {} {:.6f} {}\n", run.topic, run.frames[i].frame.str(), i + 1,
                           run.frames[i].score, run.method);
    }
    return out;
}

void write_trec_runs(const std::filesystem::path& path, std::span<const RetrievalRun> runs) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& run : runs) write_trec_run(out, run);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RetrievalRun> parse_trec_runs(std::string_view text) {
    std::vector<RetrievalRun> runs;
    std::map<std::pair<std::string, std::string>, std::size_t> slot;
    std::vector<std::set<std::string>> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        std::string topic, q0, frame, rank_s, score_s, method, extra;
        if (!(fields >> topic >> q0 >> frame >> rank_s >> score_s >> method) || (fields >> extra)) {
            throw RunFormatError(lineno, "expected 6 fields: topic Q0 frame rank score method");
        }
        if (q0 != "Q0") throw RunFormatError(lineno, "second field must be Q0, got '" + q0 + "'");
        std::size_t rank = 0;
        auto [rp, rec] = std::from_chars(rank_s.data(), rank_s.data() + rank_s.size(), rank);
        if (rec != std::errc() || rp != rank_s.data() + rank_s.size() || rank == 0) {
            throw RunFormatError(lineno, "bad rank '" + rank_s + "'");
        }
        double score = 0.0;
        try {
            std::size_t used = 0;
            score = std::stod(score_s, &used);
            if (used != score_s.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw RunFormatError(lineno, "bad score '" + score_s + "'");
        }

        auto [it, inserted] = slot.try_emplace({topic, method}, runs.size());
        if (inserted) {
            runs.push_back(RetrievalRun{topic, method, {}, 0});
            seen.emplace_back();
        }
        auto& run = runs[it->second];
        if (rank != run.frames.size() + 1) {
            throw RunFormatError(lineno, fmt::format("rank {} out of sequence for topic {} (expected {})",
                                                     rank, topic, run.frames.size() + 1));
        }
        if (!seen[it->second].insert(frame).second) {
            throw RunFormatError(lineno, "frame '" + frame + "' repeated in topic " + topic);
        }
        run.frames.push_back(ScoredFrame{FrameId(frame), score, {}});
        run.k = run.frames.size();
    }
    return runs;
}

std::vector<RetrievalRun> load_trec_runs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open run file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trec_runs(buf.str());
}

}  // namespace lifelog
