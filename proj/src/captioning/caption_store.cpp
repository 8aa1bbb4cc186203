#include <cctype>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lifelog/captions.hpp"

namespace lifelog {

using nlohmann::json;

std::string_view to_string(CaptionGranularity g) {
    switch (g) {
        case CaptionGranularity::Single:
            return "single";
        case CaptionGranularity::Collective:
            return "collective";
        case CaptionGranularity::FineGrained:
            return "fine_grained";
        case CaptionGranularity::CoarseGrained:
            return "coarse_grained";
        case CaptionGranularity::Summary:
            return "summary";
    }
    return "unknown";
}

CaptionGranularity parse_granularity(std::string_view name) {
    if (name == "single") return CaptionGranularity::Single;
    if (name == "collective") return CaptionGranularity::Collective;
    if (name == "fine_grained" || name == "fine") return CaptionGranularity::FineGrained;
    if (name == "coarse_grained" || name == "coarse") return CaptionGranularity::CoarseGrained;
    if (name == "summary") return CaptionGranularity::Summary;
    throw std::invalid_argument("unknown caption granularity '" + std::string(name) + "'");
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

std::string validate_caption(const Caption& caption, const Corpus* corpus) {
    if (caption.id.empty()) return "caption_id is empty";
    if (caption.text.empty()) return "caption '" + caption.id.str() + "' has empty text";
    if (caption.frame_ids.empty()) return "caption '" + caption.id.str() + "' has no frame_ids";
    const bool one_frame = caption.granularity == CaptionGranularity::Single ||
                           caption.granularity == CaptionGranularity::FineGrained;
    if (one_frame && caption.frame_ids.size() != 1) {
        return "caption '" + caption.id.str() + "' is " + std::string(to_string(caption.granularity)) +
               " but maps to " + std::to_string(caption.frame_ids.size()) + " frames";
    }
    std::unordered_set<FrameId> seen;
    for (const auto& f : caption.frame_ids) {
        if (f.empty()) return "caption '" + caption.id.str() + "' has an empty frame id";
        if (!seen.insert(f).second) {
            return "caption '" + caption.id.str() + "' lists frame '" + f.str() + "' twice";
        }
    }
    if (corpus != nullptr) {
        const Frame* prev = nullptr;
        for (const auto& f : caption.frame_ids) {
            const Frame* cur = corpus->find(f);
            if (cur == nullptr) {
                return "caption '" + caption.id.str() + "' references unknown frame '" + f.str() + "'";
            }
            if (prev != nullptr && (cur->timestamp < prev->timestamp ||
                                    (prev->segment == cur->segment &&
                                     cur->index_in_segment < prev->index_in_segment))) {
                return "caption '" + caption.id.str() + "' frame_ids are not chronological";
            }
            prev = cur;
        }
    }
    return {};
}

std::string caption_to_json_line(const Caption& c) {
    json frames = json::array();
    for (const auto& f : c.frame_ids) frames.push_back(f.str());
    json obj = {{"caption_id", c.id.str()},
                {"text", c.text},
                {"granularity", std::string(to_string(c.granularity))},
                {"frame_ids", std::move(frames)},
                {"model", c.model},
                {"generated_at", c.generated_at}};
    if (c.batch_id) obj["batch_id"] = *c.batch_id;
    return obj.dump();
}

namespace {

const json& field(const json& obj, const char* key, json::value_t type) {
    auto it = obj.find(key);
    if (it == obj.end()) throw CaptionStoreError(0, std::string("missing field '") + key + "'");
    if (it->type() != type) throw CaptionStoreError(0, std::string("field '") + key + "' has wrong type");
    return *it;
}

}  // namespace

Caption caption_from_json_line(std::string_view line) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw CaptionStoreError(0, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw CaptionStoreError(0, "expected a JSON object");
    Caption c;
    c.id = CaptionId(field(obj, "caption_id", json::value_t::string).get<std::string>());
    c.text = field(obj, "text", json::value_t::string).get<std::string>();
    try {
        c.granularity =
            parse_granularity(field(obj, "granularity", json::value_t::string).get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw CaptionStoreError(0, e.what());
    }
    for (const auto& f : field(obj, "frame_ids", json::value_t::array)) {
        if (!f.is_string()) throw CaptionStoreError(0, "frame_ids must contain strings");
        c.frame_ids.emplace_back(f.get<std::string>());
    }
    c.model = field(obj, "model", json::value_t::string).get<std::string>();
    c.generated_at = field(obj, "generated_at", json::value_t::string).get<std::string>();
    if (auto it = obj.find("batch_id"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw CaptionStoreError(0, "field 'batch_id' has wrong type");
        c.batch_id = it->get<std::string>();
    }
    return c;
}

void save_captions(const std::filesystem::path& path, const std::vector<Caption>& captions) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CaptionStoreError(0, "cannot write " + path.string());
    for (const auto& c : captions) out << caption_to_json_line(c) << '\n';
    if (!out) throw CaptionStoreError(0, "write failed: " + path.string());
}

std::vector<Caption> load_captions(const std::filesystem::path& path, const Corpus* corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CaptionStoreError(0, "cannot open " + path.string());
    std::vector<Caption> out;
    std::unordered_set<CaptionId> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Caption c;
        try {
            c = caption_from_json_line(line);
        } catch (const CaptionStoreError& e) {
            throw CaptionStoreError(lineno, e.what());
        }
        if (auto problem = validate_caption(c, corpus); !problem.empty()) {
            throw CaptionStoreError(lineno, problem);
        }
        if (!ids.insert(c.id).second) {
            throw CaptionStoreError(lineno, "duplicate caption_id '" + c.id.str() + "'");
        }
        out.push_back(std::move(c));
    }
    return out;
}

CaptionStoreWriter::CaptionStoreWriter(const std::filesystem::path& path, bool truncate) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | (truncate ? std::ios::trunc : std::ios::app));
    if (!out_) throw CaptionStoreError(0, "cannot open " + path.string() + " for writing");
}

void CaptionStoreWriter::append(const Caption& caption) {
    auto line = caption_to_json_line(caption);
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
    out_.flush();
}

}  // namespace lifelog
