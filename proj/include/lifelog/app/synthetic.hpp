#pragma once

// Synthetic mock-backed datasets: background activity interleaved with
// planted topic scenes whose frames are the relevance judgments.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lifelog/eval.hpp"
#include "lifelog/ids.hpp"

namespace lifelog::app {

struct SyntheticOptions {
    std::size_t frames = 100;
    std::size_t days = 2;
    std::size_t topics = 10;  // at most planted_scenes().size()
    std::size_t planted_per_topic = 3;
    std::uint64_t seed = 1;
};

struct SyntheticDataset {
    std::filesystem::path dir;
    std::filesystem::path manifest;
    std::filesystem::path qrels;
    std::filesystem::path topics_file;
    std::filesystem::path config;
    std::vector<Topic> topics;
    /// Planted frames per topic id, in corpus order.
    std::map<std::string, std::vector<FrameId>> planted;
};

const std::vector<std::string>& planted_scenes();
const std::vector<std::string>& background_activities();

/// Writes images/, manifest.jsonl, qrels.txt, topics.json and lifelog.toml
/// (mock backends, fixed clock) into `dir`. Same options, same bytes.
/// Throws std::invalid_argument when the planted frames do not fit.
SyntheticDataset write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticOptions& options);

}  // namespace lifelog::app
