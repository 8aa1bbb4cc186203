#pragma once

// Shared helpers for tests: scratch directories and small synthetic corpora
// whose "images" are text files naming a scene (see mock_clients.hpp).

#include <filesystem>
#include <string>
#include <vector>

#include "lifelog/corpus.hpp"

namespace lifelog::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// One day per entry of `days`; frame j of day d gets id "d<d>_<jjjj>", a
/// timestamp one minute after the previous frame starting 08:00 on
/// 2016-08-(15+d), and an image file whose first line is the scene text.
/// Returns the manifest path (inside `dir`).
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                             const std::vector<std::vector<std::string>>& days);

std::string frame_name(std::size_t day, std::size_t index);

/// Scenes used as background material by synthetic corpora.
const std::vector<std::string>& background_scenes();

}  // namespace lifelog::testing
