#include <fstream>
#include <sstream>

#include "lifelog/captioning.hpp"

namespace lifelog {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.single =
        "This photo was taken on {date} at {time} by a wearable camera worn by an individual, "
        "so it shows the world from their own first-person viewpoint. Reconstruct the "
        "individual's personal experience at this moment: what they are doing, where they are, "
        "and what is happening around them. Answer in {min_words}-{max_words} words, "
        "highlighting the key moments, locations, and activities.";
    t.collective =
        "These {frame_count} photos were taken consecutively on {date} between {start_time} and "
        "{end_time} by a wearable camera worn by an individual. Treat them as frames of one video "
        "seen from the individual's first-person viewpoint. Reconstruct the individual's "
        "experience over this time interval in {min_words}-{max_words} words, highlighting the key "
        "moments, locations, and activities.";
    t.merged =
        "You are given {frame_count} consecutive photos from an individual's wearable camera, "
        "seen from their first-person viewpoint:\n{frame_list}\n"
        "Summary of the individual's experience before these photos: {previous_summary}\n\n"
        "Complete three tasks.\n"
        "(1) Fine-grained caption: write a brief caption for each image that uses its time.\n"
        "(2) Frame summary: summarize the individual's experiences across these images in "
        "{summary_min_words}-{summary_max_words} words.\n"
        "(3) Coarse-grained caption: group consecutive images that show the same event and "
        "describe each group. Every image must belong to exactly one group.\n\n"
        "Reply with only a JSON document of the form\n"
        "{\"fine_grained\": [{\"image\": \"image_1\", \"caption\": \"...\"}, ...], "
        "\"summary\": \"...\", "
        "\"groups\": [{\"images\": [\"image_1\", \"image_2\"], \"caption\": \"...\"}, ...]}";
    t.merged_retry =
        "\n\nYour previous reply could not be used ({diagnostic}). Reply again with only the JSON "
        "document described above.";
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t = defaults();
    const std::pair<const char*, std::string*> files[] = {{"single.txt", &t.single},
                                                          {"collective.txt", &t.collective},
                                                          {"merged.txt", &t.merged},
                                                          {"merged_retry.txt", &t.merged_retry}};
    for (auto [name, slot] : files) {
        const auto path = dir / name;
        if (std::filesystem::exists(path)) *slot = read_file(path);
    }
    return t;
}

std::string render_template(std::string_view tmpl,
                            std::span<const std::pair<std::string, std::string>> values) {
    std::string out;
    out.reserve(tmpl.size() + 64);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto close = tmpl.find('}', open + 1);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(open));
            break;
        }
        const auto key = tmpl.substr(open + 1, close - open - 1);
        const std::string* value = nullptr;
        for (const auto& [k, v] : values) {
            if (k == key) {
                value = &v;
                break;
            }
        }
        if (value != nullptr) {
            out.append(*value);
            pos = close + 1;
        } else {
            out.push_back('{');
            pos = open + 1;
        }
    }
    return out;
}

std::string build_single_prompt(const Frame& frame, const PromptTemplates& templates) {
    const std::pair<std::string, std::string> values[] = {
        {"date", frame.timestamp.local_date()},
        {"time", frame.timestamp.local_time()},
        {"min_words", std::to_string(kSingleWords.min)},
        {"max_words", std::to_string(kSingleWords.max)},
    };
    return render_template(templates.single, values);
}

std::string build_collective_prompt(const Window& window, const PromptTemplates& templates) {
    const std::pair<std::string, std::string> values[] = {
        {"date", window.start.local_date()},
        {"start_time", window.start.local_time()},
        {"end_time", window.end.local_time()},
        {"frame_count", std::to_string(window.frames.size())},
        {"min_words", std::to_string(kCollectiveWords.min)},
        {"max_words", std::to_string(kCollectiveWords.max)},
    };
    return render_template(templates.collective, values);
}

std::string build_merged_prompt(std::span<const Frame> batch, const std::string& previous_summary,
                                const PromptTemplates& templates) {
    std::string list;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        list += "image_" + std::to_string(i + 1) + ": taken " + batch[i].timestamp.local_date() +
                " " + batch[i].timestamp.local_time() + "\n";
    }
    if (!list.empty()) list.pop_back();
    const std::pair<std::string, std::string> values[] = {
        {"frame_count", std::to_string(batch.size())},
        {"frame_list", list},
        {"previous_summary", previous_summary.empty() ? std::string("(none)") : previous_summary},
        {"summary_min_words", std::to_string(kSummaryWords.min)},
        {"summary_max_words", std::to_string(kSummaryWords.max)},
    };
    return render_template(templates.merged, values);
}

}  // namespace lifelog
