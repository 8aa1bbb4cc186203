#include "lifelog/eval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace lifelog {

namespace {

std::string read_text(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EvalError(std::string("cannot open ") + what + " " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const std::map<FrameId, std::string>& checked_judgments(const RetrievalRun& run, const Qrels& qrels) {
    if (!qrels.has_topic(run.topic)) throw EvalError("no judgments for topic '" + run.topic + "'");
    std::unordered_set<std::string_view> seen;
    for (const auto& f : run.frames) {
        if (!seen.insert(f.frame.str()).second) {
            throw EvalError("frame '" + f.frame.str() + "' appears twice in the run for topic '" + run.topic + "'");
        }
    }
    return qrels.judgments(run.topic);
}

void check_k(std::size_t k) {
    if (k == 0) throw EvalError("k must be positive");
}

}  // namespace

void Qrels::add(const std::string& topic, const FrameId& frame, const std::string& cluster) {
    if (topic.empty() || frame.empty() || cluster.empty()) throw EvalError("qrels entries must be non-empty");
    auto& frames = judgments_[topic];
    auto [it, inserted] = frames.try_emplace(frame, cluster);
    if (!inserted && it->second != cluster) {
        throw EvalError("frame '" + frame.str() + "' judged in clusters '" + it->second + "' and '" + cluster +
                        "' for topic '" + topic + "'");
    }
}

const std::map<FrameId, std::string>& Qrels::judgments(const std::string& topic) const {
    auto it = judgments_.find(topic);
    if (it == judgments_.end()) throw EvalError("no judgments for topic '" + topic + "'");
    return it->second;
}

std::set<std::string> Qrels::clusters(const std::string& topic) const {
    std::set<std::string> out;
    for (const auto& [frame, cluster] : judgments(topic)) out.insert(cluster);
    return out;
}

const std::string* Qrels::cluster_of(const std::string& topic, const FrameId& frame) const {
    auto t = judgments_.find(topic);
    if (t == judgments_.end()) return nullptr;
    auto f = t->second.find(frame);
    return f == t->second.end() ? nullptr : &f->second;
}

std::vector<std::string> Qrels::topics() const {
    std::vector<std::string> out;
    for (const auto& [topic, frames] : judgments_) out.push_back(topic);
    return out;
}

std::size_t Qrels::size() const noexcept {
    std::size_t n = 0;
    for (const auto& [topic, frames] : judgments_) n += frames.size();
    return n;
}

Qrels parse_qrels(std::string_view text) {
    Qrels qrels;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        std::string topic, frame, cluster, extra;
        if (!(fields >> topic >> frame >> cluster) || (fields >> extra)) {
            throw EvalError(fmt::format("qrels line {}: expected 3 fields: topic frame cluster", lineno));
        }
        try {
            qrels.add(topic, FrameId(frame), cluster);
        } catch (const EvalError& e) {
            throw EvalError(fmt::format("qrels line {}: {}", lineno, e.what()));
        }
    }
    return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
    return parse_qrels(read_text(path, "qrels"));
}

std::vector<Topic> parse_topics(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw EvalError(fmt::format("topics: invalid JSON at byte {}: {}", e.byte, e.what()));
    }
    if (!doc.is_array()) throw EvalError("topics: expected a JSON array");
    std::vector<Topic> topics;
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& t = doc[i];
        auto field = [&](const char* name) {
            if (!t.contains(name) || !t[name].is_string()) {
                throw EvalError(fmt::format("topics entry {}: missing string field '{}'", i + 1, name));
            }
            return t[name].get<std::string>();
        };
        Topic topic{field("id"), field("title"), field("description"), std::nullopt};
        if (topic.id.empty()) throw EvalError(fmt::format("topics entry {}: empty id", i + 1));
        if (t.contains("k_override") && !t["k_override"].is_null()) {
            if (!t["k_override"].is_number_unsigned() || t["k_override"].get<std::size_t>() == 0) {
                throw EvalError(fmt::format("topics entry {}: k_override must be a positive integer", i + 1));
            }
            topic.k_override = t["k_override"].get<std::size_t>();
        }
        if (!ids.insert(topic.id).second) {
            throw EvalError(fmt::format("topics entry {}: duplicate topic id '{}'", i + 1, topic.id));
        }
        topics.push_back(std::move(topic));
    }
    return topics;
}

std::vector<Topic> load_topics(const std::filesystem::path& path) {
    return parse_topics(read_text(path, "topics"));
}

double precision_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
    check_k(k);
    const auto& judged = checked_judgments(run, qrels);
    const std::size_t depth = std::min(k, run.frames.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) hits += judged.contains(run.frames[i].frame);
    return static_cast<double>(hits) / static_cast<double>(k);
}

double cluster_recall_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
    check_k(k);
    const auto& judged = checked_judgments(run, qrels);
    const auto total = qrels.clusters(run.topic).size();
    if (total == 0) throw EvalError("topic '" + run.topic + "' has no clusters");
    std::set<std::string_view> found;
    const std::size_t depth = std::min(k, run.frames.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (auto it = judged.find(run.frames[i].frame); it != judged.end()) found.insert(it->second);
    }
    return static_cast<double>(found.size()) / static_cast<double>(total);
}

double f1_at_k(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
    const double p = precision_at_k(run, qrels, k);
    const double cr = cluster_recall_at_k(run, qrels, k);
    return p + cr > 0.0 ? 2.0 * p * cr / (p + cr) : 0.0;
}

MetricsReport evaluate_runs(std::span<const RetrievalRun> runs, const Qrels& qrels,
                            std::span<const Topic> topics, std::size_t k, std::string method) {
    check_k(k);
    std::map<std::string, const RetrievalRun*> by_topic;
    for (const auto& run : runs) {
        if (!by_topic.emplace(run.topic, &run).second) {
            throw EvalError("more than one run for topic '" + run.topic + "'");
        }
    }
    for (const auto& [topic, run] : by_topic) {
        const bool known = std::any_of(topics.begin(), topics.end(), [&](const Topic& t) { return t.id == topic; });
        if (!known) throw EvalError("run for unknown topic '" + topic + "'");
    }
    if (method.empty() && !runs.empty()) method = runs.front().method;

    MetricsReport report;
    report.method = method;
    report.k = k;
    for (const auto& topic : topics) {
        if (!qrels.has_topic(topic.id)) throw EvalError("no judgments for topic '" + topic.id + "'");
        TopicMetrics m{topic.id, topic.k_override.value_or(k), 0.0, 0.0, 0.0};
        if (auto it = by_topic.find(topic.id); it != by_topic.end()) {
            m.precision = precision_at_k(*it->second, qrels, m.k);
            m.cluster_recall = cluster_recall_at_k(*it->second, qrels, m.k);
            m.f1 = m.precision + m.cluster_recall > 0.0
                       ? 2.0 * m.precision * m.cluster_recall / (m.precision + m.cluster_recall)
                       : 0.0;
        } else {
            report.warnings.push_back("no run for topic '" + topic.id + "', scored 0");
            spdlog::warn("{}", report.warnings.back());
        }
        report.per_topic.push_back(m);
    }
    if (!report.per_topic.empty()) {
        const auto n = static_cast<double>(report.per_topic.size());
        for (const auto& m : report.per_topic) {
            report.avg_precision += m.precision;
            report.avg_cluster_recall += m.cluster_recall;
            report.avg_f1 += m.f1;
        }
        report.avg_precision /= n;
        report.avg_cluster_recall /= n;
        report.avg_f1 /= n;
    }
    return report;
}

void to_json(nlohmann::json& j, const MetricsReport& report) {
    nlohmann::json per_topic = nlohmann::json::array();
    for (const auto& m : report.per_topic) {
        per_topic.push_back({{"topic", m.topic},
                             {"k", m.k},
                             {"p_at_k", m.precision},
                             {"cr_at_k", m.cluster_recall},
                             {"f1_at_k", m.f1}});
    }
    j = {{"method", report.method},
         {"k", report.k},
         {"per_topic", per_topic},
         {"averages",
          {{"p_at_k", report.avg_precision}, {"cr_at_k", report.avg_cluster_recall}, {"f1_at_k", report.avg_f1}}},
         {"warnings", report.warnings}};
}

void from_json(const nlohmann::json& j, MetricsReport& report) {
    report = MetricsReport{};
    j.at("method").get_to(report.method);
    j.at("k").get_to(report.k);
    for (const auto& m : j.at("per_topic")) {
        report.per_topic.push_back({m.at("topic").get<std::string>(), m.at("k").get<std::size_t>(),
                                    m.at("p_at_k").get<double>(), m.at("cr_at_k").get<double>(),
                                    m.at("f1_at_k").get<double>()});
    }
    const auto& avg = j.at("averages");
    avg.at("p_at_k").get_to(report.avg_precision);
    avg.at("cr_at_k").get_to(report.avg_cluster_recall);
    avg.at("f1_at_k").get_to(report.avg_f1);
    if (j.contains("warnings")) j.at("warnings").get_to(report.warnings);
}

std::string format_metrics_table(std::span<const MetricsReport> reports) {
    std::size_t topics = 0;
    for (const auto& r : reports) topics = std::max(topics, r.per_topic.size());
    std::size_t k = reports.empty() ? 10 : reports.front().k;

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"Method Name"};
    for (std::size_t t = 0; t < topics; ++t) header.push_back(fmt::format("T{}", t + 1));
    header.push_back(fmt::format("Avg CR@{}", k));
    header.push_back(fmt::format("Avg F1@{}", k));
    header.push_back(fmt::format("Avg P@{}", k));
    rows.push_back(header);
    for (const auto& r : reports) {
        std::vector<std::string> row{r.method};
        for (std::size_t t = 0; t < topics; ++t) {
            row.push_back(t < r.per_topic.size() ? fmt::format("{:.2f}", r.per_topic[t].precision) : "-");
        }
        row.push_back(fmt::format("{:.3f}", r.avg_cluster_recall));
        row.push_back(fmt::format("{:.3f}", r.avg_f1));
        row.push_back(fmt::format("{:.2f}", r.avg_precision));
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (c > 0) out += " | ";
            out += c == 0 ? fmt::format("{:<{}}", rows[r][c], width[c]) : fmt::format("{:>{}}", rows[r][c], width[c]);
        }
        out += '\n';
        if (r == 0) {
            for (std::size_t c = 0; c < width.size(); ++c) {
                if (c > 0) out += "-+-";
                out += std::string(width[c], '-');
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace lifelog
