#pragma once

// Brute-force metric oracle: works on raw (topic, frame, cluster) triples by
// exhaustive scanning and shares no code with the eval module.

#include <algorithm>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace lifelog::testing {

struct Judgment {
    std::string topic;
    std::string frame;
    std::string cluster;
};

struct OracleMetrics {
    double p = 0, cr = 0, f1 = 0;
};

inline OracleMetrics oracle_metrics(const std::vector<Judgment>& qrels, const std::string& topic,
                                    const std::vector<std::string>& run, std::size_t k) {
    std::size_t relevant_hits = 0;
    std::set<std::string> found, all;
    for (const auto& j : qrels) {
        if (j.topic == topic) all.insert(j.cluster);
    }
    for (std::size_t i = 0; i < run.size() && i < k; ++i) {
        bool relevant = false;
        for (const auto& j : qrels) {
            if (j.topic == topic && j.frame == run[i]) {
                relevant = true;
                found.insert(j.cluster);
            }
        }
        relevant_hits += relevant ? 1 : 0;
    }
    OracleMetrics m;
    m.p = static_cast<double>(relevant_hits) / static_cast<double>(k);
    m.cr = all.empty() ? 0.0 : static_cast<double>(found.size()) / static_cast<double>(all.size());
    m.f1 = (m.p + m.cr) == 0.0 ? 0.0 : 2.0 * m.p * m.cr / (m.p + m.cr);
    return m;
}

struct RandomInstance {
    std::vector<Judgment> qrels;
    std::vector<std::string> run;
    std::size_t k = 10;
};

/// One topic "T", up to 50 candidate frames, 1..6 clusters, at least one
/// judged frame; the run is a random ordering of a random subset.
inline RandomInstance random_instance(std::mt19937_64& rng) {
    RandomInstance inst;
    const std::size_t frames = 1 + rng() % 50;
    const std::size_t clusters = 1 + rng() % 6;
    std::vector<std::string> universe;
    for (std::size_t f = 0; f < frames; ++f) universe.push_back("F" + std::to_string(f));
    const double p_relevant = std::uniform_real_distribution<double>(0.05, 0.9)(rng);
    for (const auto& f : universe) {
        if (std::uniform_real_distribution<double>(0, 1)(rng) < p_relevant) {
            inst.qrels.push_back({"T", f, "C" + std::to_string(rng() % clusters)});
        }
    }
    if (inst.qrels.empty()) inst.qrels.push_back({"T", universe[rng() % frames], "C0"});
    std::shuffle(universe.begin(), universe.end(), rng);
    universe.resize(rng() % (frames + 1));
    inst.run = universe;
    inst.k = 1 + rng() % 60;
    return inst;
}

}  // namespace lifelog::testing
