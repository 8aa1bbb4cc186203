#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lifelog/ids.hpp"
#include "lifelog/run.hpp"

namespace lifelog {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Topic {
    std::string id;
    std::string title;
    std::string description;
    /// Evaluation depth for this topic when it differs from the global k.
    std::optional<std::size_t> k_override;

    friend bool operator==(const Topic&, const Topic&) = default;
};

/// Relevance judgments: per topic, each judged frame belongs to exactly one
/// cluster. Only relevant frames are listed.
class Qrels {
public:
    /// Throws EvalError when the frame is already judged with another cluster
    /// for this topic. Re-adding the same triple is a no-op.
    void add(const std::string& topic, const FrameId& frame, const std::string& cluster);

    bool has_topic(const std::string& topic) const { return judgments_.contains(topic); }
    /// Throws EvalError for unknown topics.
    const std::map<FrameId, std::string>& judgments(const std::string& topic) const;
    std::set<std::string> clusters(const std::string& topic) const;
    /// Cluster of a relevant frame, nullptr when not relevant.
    const std::string* cluster_of(const std::string& topic, const FrameId& frame) const;
    std::vector<std::string> topics() const;
    std::size_t size() const noexcept;

private:
    std::map<std::string, std::map<FrameId, std::string>> judgments_;
};

/// Whitespace-separated `topic frame cluster` lines; blank lines and lines
/// starting with '#' are skipped. Errors carry the line number.
Qrels parse_qrels(std::string_view text);
Qrels load_qrels(const std::filesystem::path& path);

/// JSON array of {"id", "title", "description", "k_override"?}. Topic ids
/// must be unique.
std::vector<Topic> parse_topics(std::string_view text);
std::vector<Topic> load_topics(const std::filesystem::path& path);

/// Relevant frames among the first k, divided by k.
double precision_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k);
/// Distinct clusters of the relevant frames among the first k, divided by the
/// topic's cluster count.
double cluster_recall_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k);
/// Harmonic mean of P@k and CR@k; 0 when both are 0.
double f1_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k);

struct TopicMetrics {
    std::string topic;
    std::size_t k = 0;
    double precision = 0.0;
    double cluster_recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const TopicMetrics&, const TopicMetrics&) = default;
};

/// Per-topic metrics (in topic order) and their arithmetic means.
struct MetricsReport {
    std::string method;
    std::size_t k = 0;
    std::vector<TopicMetrics> per_topic;
    double avg_precision = 0.0;
    double avg_cluster_recall = 0.0;
    double avg_f1 = 0.0;
    std::vector<std::string> warnings;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

void to_json(nlohmann::json& j, const MetricsReport& report);
void from_json(const nlohmann::json& j, MetricsReport& report);

/// Scores one run per topic. Topics without a run score 0 with a warning;
/// a topic's k_override replaces k. Throws EvalError for two runs of the same
/// topic, a run for a topic outside `topics`, or a topic without judgments.
MetricsReport evaluate_runs(std::span<const RetrievalRun> runs, const Qrels& qrels,
                            std::span<const Topic> topics, std::size_t k, std::string method = {});

/// Aligned plain-text table, one row per report:
/// Method Name | T1 .. Tn (P@K) | Avg CR@K | Avg F1@K | Avg P@K
std::string format_metrics_table(std::span<const MetricsReport> reports);

}  // namespace lifelog
