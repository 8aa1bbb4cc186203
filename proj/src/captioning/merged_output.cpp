#include <algorithm>
#include <charconv>

#include <nlohmann/json.hpp>

#include "lifelog/captioning.hpp"

namespace lifelog {

using nlohmann::json;

std::string_view to_string(MergedOutputErrorKind kind) {
    switch (kind) {
        case MergedOutputErrorKind::Malformed:
            return "malformed";
        case MergedOutputErrorKind::MissingSection:
            return "missing-section";
        case MergedOutputErrorKind::IndexOutOfRange:
            return "index-out-of-range";
        case MergedOutputErrorKind::NonContiguousGroup:
            return "non-contiguous-group";
        case MergedOutputErrorKind::Coverage:
            return "coverage";
    }
    return "unknown";
}

namespace {

[[noreturn]] void fail(MergedOutputErrorKind kind, const std::string& message) {
    throw MergedOutputError(kind, message);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Removes one ```lang ... ``` fence around the whole document.
std::string_view strip_fence(std::string_view s) {
    s = trim(s);
    if (s.size() >= 6 && s.substr(0, 3) == "```" && s.substr(s.size() - 3) == "```") {
        const auto nl = s.find('\n');
        if (nl != std::string_view::npos && nl < s.size() - 3) {
            return trim(s.substr(nl + 1, s.size() - 3 - (nl + 1)));
        }
    }
    return s;
}

// "image_7" -> 6 (zero-based), validated against the batch size.
std::size_t image_index(const json& ref, std::size_t batch_size, const char* where) {
    if (!ref.is_string()) {
        fail(MergedOutputErrorKind::Malformed, std::string(where) + ": image reference must be a string");
    }
    const auto s = ref.get<std::string>();
    constexpr std::string_view prefix = "image_";
    if (s.size() <= prefix.size() || s.compare(0, prefix.size(), prefix) != 0) {
        fail(MergedOutputErrorKind::Malformed, std::string(where) + ": bad image reference '" + s + "'");
    }
    std::size_t n = 0;
    const char* begin = s.data() + prefix.size();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, n);
    if (ec != std::errc{} || ptr != end) {
        fail(MergedOutputErrorKind::Malformed, std::string(where) + ": bad image reference '" + s + "'");
    }
    if (n < 1 || n > batch_size) {
        fail(MergedOutputErrorKind::IndexOutOfRange,
             std::string(where) + ": '" + s + "' outside image_1..image_" + std::to_string(batch_size));
    }
    return n - 1;
}

std::string caption_text(const json& value, const std::string& where) {
    if (!value.is_string()) fail(MergedOutputErrorKind::Malformed, where + ": caption must be a string");
    auto text = std::string(trim(value.get<std::string>()));
    if (text.empty()) fail(MergedOutputErrorKind::Malformed, where + ": caption is empty");
    return text;
}

const json& section(const json& doc, const char* name) {
    auto it = doc.find(name);
    if (it == doc.end() || it->is_null()) {
        fail(MergedOutputErrorKind::MissingSection, std::string("missing '") + name + "' section");
    }
    return *it;
}

}  // namespace

MergedBatchOutput parse_merged_output(std::string_view raw, std::span<const FrameId> batch) {
    const auto n = batch.size();
    if (n == 0) fail(MergedOutputErrorKind::Malformed, "empty batch");

    json doc;
    try {
        doc = json::parse(strip_fence(raw));
    } catch (const json::parse_error& e) {
        fail(MergedOutputErrorKind::Malformed, std::string("not a JSON document: ") + e.what());
    }
    if (!doc.is_object()) fail(MergedOutputErrorKind::Malformed, "top level must be an object");

    const json& fine = section(doc, "fine_grained");
    const json& summary = section(doc, "summary");
    const json& groups = section(doc, "groups");

    MergedBatchOutput out;

    // (1) fine-grained: exactly one caption per image.
    std::vector<std::optional<std::string>> fine_text(n);
    auto put_fine = [&](const json& ref, const json& text) {
        const auto idx = image_index(ref, n, "fine_grained");
        if (fine_text[idx]) {
            fail(MergedOutputErrorKind::Coverage, "fine_grained describes image_" +
                                                      std::to_string(idx + 1) + " twice");
        }
        fine_text[idx] = caption_text(text, "fine_grained image_" + std::to_string(idx + 1));
    };
    if (fine.is_array()) {
        for (const auto& item : fine) {
            if (!item.is_object() || !item.contains("image") || !item.contains("caption")) {
                fail(MergedOutputErrorKind::Malformed,
                     "fine_grained entries must be objects with 'image' and 'caption'");
            }
            put_fine(item.at("image"), item.at("caption"));
        }
    } else if (fine.is_object()) {
        for (const auto& [key, value] : fine.items()) put_fine(json(key), value);
    } else {
        fail(MergedOutputErrorKind::Malformed, "'fine_grained' must be an array or object");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!fine_text[i]) {
            fail(MergedOutputErrorKind::Coverage,
                 "fine_grained has no caption for image_" + std::to_string(i + 1));
        }
        out.fine_grained.emplace_back(batch[i], std::move(*fine_text[i]));
    }

    // (2) summary.
    out.summary = caption_text(summary, "summary");

    // (3) groups: contiguous runs that partition the batch.
    if (!groups.is_array()) fail(MergedOutputErrorKind::Malformed, "'groups' must be an array");
    struct Run {
        std::size_t first;
        std::size_t last;
        std::string text;
    };
    std::vector<Run> runs;
    std::vector<int> owner(n, -1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& item = groups[g];
        const auto where = "group " + std::to_string(g + 1);
        if (!item.is_object() || !item.contains("images") || !item.contains("caption") ||
            !item.at("images").is_array()) {
            fail(MergedOutputErrorKind::Malformed,
                 where + ": expected an object with an 'images' array and a 'caption'");
        }
        const auto& images = item.at("images");
        if (images.empty()) fail(MergedOutputErrorKind::Malformed, where + " has no images");
        std::vector<std::size_t> idx;
        for (const auto& ref : images) {
            const auto i = image_index(ref, n, where.c_str());
            if (owner[i] != -1) {
                fail(MergedOutputErrorKind::Coverage,
                     "image_" + std::to_string(i + 1) + " appears in more than one group position");
            }
            owner[i] = static_cast<int>(g);
            idx.push_back(i);
        }
        std::sort(idx.begin(), idx.end());
        if (idx.back() - idx.front() + 1 != idx.size()) {
            fail(MergedOutputErrorKind::NonContiguousGroup,
                 where + " is not a consecutive run of images");
        }
        runs.push_back({idx.front(), idx.back(), caption_text(item.at("caption"), where)});
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] == -1) {
            fail(MergedOutputErrorKind::Coverage, "image_" + std::to_string(i + 1) + " is in no group");
        }
    }
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.first < b.first; });
    for (auto& r : runs) {
        CoarseGroup group;
        for (std::size_t i = r.first; i <= r.last; ++i) group.frames.push_back(batch[i]);
        group.text = std::move(r.text);
        out.coarse_groups.push_back(std::move(group));
    }
    return out;
}

MergedBatchOutput degenerate_merged_output(std::span<const FrameId> batch) {
    MergedBatchOutput out;
    for (const auto& f : batch) {
        out.fine_grained.emplace_back(f, std::string{});
        out.coarse_groups.push_back(CoarseGroup{{f}, {}});
    }
    return out;
}

}  // namespace lifelog
