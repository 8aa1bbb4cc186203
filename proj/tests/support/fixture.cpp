#include "fixture.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace lifelog::testing {

TempDir::TempDir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
        path_ = base / fmt::format("lifelog-test-{:016x}", (std::uint64_t{rd()} << 32) | rd());
        if (std::filesystem::create_directories(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string frame_name(std::size_t day, std::size_t index) {
    return fmt::format("d{}_{:04}", day, index);
}

std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                             const std::vector<std::vector<std::string>>& days) {
    std::string manifest;
    for (std::size_t d = 0; d < days.size(); ++d) {
        for (std::size_t j = 0; j < days[d].size(); ++j) {
            const auto id = frame_name(d, j);
            const auto image = "images/" + id + ".txt";
            write_file(dir / image, days[d][j] + "\n" + id + "\n");
            const unsigned minute = 8 * 60 + static_cast<unsigned>(j);
            nlohmann::json row = {
                {"id", id},
                {"segment", fmt::format("day{}", d)},
                {"timestamp", fmt::format("2016-08-{:02}T{:02}:{:02}+01:00", 15 + d, minute / 60, minute % 60)},
                {"image", image}};
            manifest += row.dump() + "\n";
        }
    }
    const auto path = dir / "manifest.jsonl";
    write_file(path, manifest);
    return path;
}

const std::vector<std::string>& background_scenes() {
    static const std::vector<std::string> scenes = {
        "typing on a laptop at an office desk",
        "reading a paperback book on a sofa",
        "cooking pasta in a small kitchen",
        "walking along a city street",
        "watching television in a living room",
        "shopping for groceries in a supermarket",
        "eating lunch in a canteen",
        "sitting in a meeting room with colleagues",
        "washing dishes at a sink",
        "standing on a train platform",
    };
    return scenes;
}

}  // namespace lifelog::testing
