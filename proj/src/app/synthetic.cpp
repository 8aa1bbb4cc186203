#include "lifelog/app/synthetic.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lifelog/timestamp.hpp"

namespace lifelog::app {

namespace fs = std::filesystem;

const std::vector<std::string>& planted_scenes() {
    static const std::vector<std::string> scenes{
        "eating ice cream on a sandy beach",
        "riding a red bicycle along a canal",
        "playing guitar on a stage",
        "feeding ducks at a pond",
        "building a snowman in a garden",
        "painting a portrait in a studio",
        "visiting a lighthouse by the sea",
        "buying vegetables at a market stall",
        "admiring fireworks over a river",
        "climbing a rock wall indoors",
    };
    return scenes;
}

const std::vector<std::string>& background_activities() {
    static const std::vector<std::string> scenes{
        "working at a desk with a laptop",
        "driving a car on a motorway",
        "cooking pasta in a kitchen",
        "reading a book on a sofa",
        "walking down a busy street",
        "sitting in an office meeting",
        "waiting at a train station",
        "washing dishes at a sink",
        "watching television at home",
        "queueing in a coffee shop",
        "typing emails on a computer",
        "brushing teeth in a bathroom",
    };
    return scenes;
}

namespace {

void write(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string title_case(const std::string& scene) {
    std::string t = scene;
    if (!t.empty()) t[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    return t;
}

}  // namespace

SyntheticDataset write_synthetic_dataset(const fs::path& dir, const SyntheticOptions& o) {
    if (o.days == 0 || o.frames < o.days) throw std::invalid_argument("synthetic dataset needs at least one frame per day");
    if (o.topics > planted_scenes().size()) {
        throw std::invalid_argument(fmt::format("at most {} planted topics are available", planted_scenes().size()));
    }
    // Each planted frame needs a gap frame after its run; a generous bound.
    if (o.topics * o.planted_per_topic * 2 > o.frames) {
        throw std::invalid_argument("planted frames need at most half of the corpus");
    }

    std::mt19937_64 rng(o.seed);
    std::vector<std::string> scene(o.frames);
    std::vector<std::string> topic_of(o.frames);
    std::vector<int> cluster_of(o.frames, -1);
    std::vector<bool> taken(o.frames, false);
    const std::size_t per_day = o.frames / o.days;
    auto day_of = [&](std::size_t pos) { return std::min(pos / per_day, o.days - 1); };

    SyntheticDataset ds;
    for (std::size_t t = 0; t < o.topics; ++t) {
        const std::string id = fmt::format("T{}", t + 1);
        std::size_t left = o.planted_per_topic;
        int cluster = 0;
        while (left > 0) {
            const std::size_t len = std::min<std::size_t>(left, 1 + rng() % 4);
            bool placed = false;
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                const std::size_t start = rng() % (o.frames - len + 1);
                bool free = day_of(start) == day_of(start + len - 1);
                // Keep one background frame between planted runs.
                for (std::size_t i = start == 0 ? 0 : start - 1; free && i < std::min(o.frames, start + len + 1); ++i) {
                    free = !taken[i];
                }
                if (!free) continue;
                for (std::size_t i = start; i < start + len; ++i) {
                    taken[i] = true;
                    scene[i] = planted_scenes()[t];
                    topic_of[i] = id;
                    cluster_of[i] = cluster;
                }
                placed = true;
            }
            if (!placed) throw std::invalid_argument("could not place planted frames; use a larger corpus");
            left -= len;
            ++cluster;
        }
    }
    for (std::size_t pos = 0; pos < o.frames;) {
        if (taken[pos]) {
            ++pos;
            continue;
        }
        const auto& s = background_activities()[rng() % background_activities().size()];
        const std::size_t len = 1 + rng() % 5;
        for (std::size_t i = pos; i < o.frames && i < pos + len && !taken[i]; ++i, ++pos) scene[i] = s;
    }

    fs::create_directories(dir / "images");
    ds.dir = dir;
    ds.manifest = dir / "manifest.jsonl";
    ds.qrels = dir / "qrels.txt";
    ds.topics_file = dir / "topics.json";
    ds.config = dir / "lifelog.toml";

    std::string manifest, qrels = "# topic frame cluster\n";
    for (std::size_t pos = 0; pos < o.frames; ++pos) {
        const auto day = day_of(pos);
        const auto index = pos - day * per_day;
        const auto id = fmt::format("d{}_{:04}", day, index);
        const auto minutes = 8 * 60 + index;
        const auto ts = Timestamp::from_local(2016, 8, static_cast<unsigned>(15 + day), static_cast<unsigned>(minutes / 60),
                                              static_cast<unsigned>(minutes % 60), 60);
        write(dir / "images" / (id + ".txt"), scene[pos] + "\n" + id + "\n");
        manifest += nlohmann::json{{"id", id}, {"segment", fmt::format("day{}", day)}, {"timestamp", ts.iso()},
                                   {"image", "images/" + id + ".txt"}}
                        .dump() +
                    '\n';
        if (!topic_of[pos].empty()) {
            qrels += fmt::format("{} {} {}-c{}\n", topic_of[pos], id, topic_of[pos], cluster_of[pos]);
            ds.planted[topic_of[pos]].emplace_back(id);
        }
    }
    write(ds.manifest, manifest);
    write(ds.qrels, qrels);

    nlohmann::json topics = nlohmann::json::array();
    for (std::size_t t = 0; t < o.topics; ++t) {
        Topic topic{fmt::format("T{}", t + 1), title_case(planted_scenes()[t]),
                    "Find the moments when the individual was " + planted_scenes()[t] + ".", std::nullopt};
        topics.push_back({{"id", topic.id}, {"title", topic.title}, {"description", topic.description}});
        ds.topics.push_back(std::move(topic));
    }
    write(ds.topics_file, topics.dump(2) + '\n');

    write(ds.config, R"([paths]
manifest = "manifest.jsonl"
work_dir = "work"
qrels = "qrels.txt"
topics = "topics.json"

[parameters]
fixed_clock = "2000-01-01T00:00:00Z"
parallelism = 4

[captioner]
backend = "mock"

[vision_embedder]
backend = "mock"

[text_embedder]
backend = "mock"

[reranker]
backend = "mock"
)");
    return ds;
}

}  // namespace lifelog::app
