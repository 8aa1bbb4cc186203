#include "lifelog/textindex.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "../common/parallel.hpp"
#include "lifelog/filtering.hpp"
#include "lifelog/simd/kernels.hpp"
#include "lifelog/vector_store.hpp"

namespace lifelog {

std::string with_experience_prefix(std::string_view text) {
    if (text.substr(0, kExperiencePrefix.size()) == kExperiencePrefix) return std::string(text);
    std::string out;
    out.reserve(kExperiencePrefix.size() + text.size());
    out.append(kExperiencePrefix);
    out.append(text);
    return out;
}

std::vector<float> embed_caption(TextEmbedderClient& client, const Caption& caption,
                                 const RetryPolicy& retry) {
    if (caption.text.empty()) {
        throw std::invalid_argument("caption '" + caption.id.str() + "' has empty text");
    }
    const auto text = with_experience_prefix(caption.text);
    return normalized(with_retry(retry, [&] { return client.embed_text(text); }));
}

std::vector<float> embed_query(TextEmbedderClient& client, std::string_view text, bool prefix,
                               const RetryPolicy& retry) {
    if (text.empty()) throw std::invalid_argument("query text is empty");
    const auto input = prefix ? with_experience_prefix(text) : std::string(text);
    return normalized(with_retry(retry, [&] { return client.embed_text(input); }));
}

std::set<CaptionGranularity> default_index_granularities() {
    return {CaptionGranularity::Single, CaptionGranularity::Collective,
            CaptionGranularity::FineGrained, CaptionGranularity::CoarseGrained};
}

void CaptionIndex::add(Caption caption, std::span<const float> vector,
                       std::optional<Timestamp> earliest) {
    if (empty() && dim_ == 0) dim_ = vector.size();
    if (vector.size() != dim_ || dim_ == 0) {
        throw std::invalid_argument("caption '" + caption.id.str() + "': vector dimension " +
                                    std::to_string(vector.size()) + " != index dimension " +
                                    std::to_string(dim_));
    }
    const double norm = std::sqrt(static_cast<double>(simd::dot(vector, vector)));
    if (std::abs(norm - 1.0) > 1e-3) {
        throw std::invalid_argument("caption '" + caption.id.str() + "': vector is not unit length");
    }
    if (!rows_.emplace(caption.id, captions_.size()).second) {
        throw std::invalid_argument("duplicate caption id '" + caption.id.str() + "'");
    }
    captions_.push_back(std::move(caption));
    earliest_.push_back(earliest);
    vectors_.insert(vectors_.end(), vector.begin(), vector.end());
}

const Caption* CaptionIndex::find(const CaptionId& id) const {
    auto row = row_of(id);
    return row ? &captions_[*row] : nullptr;
}

std::optional<std::size_t> CaptionIndex::row_of(const CaptionId& id) const {
    auto it = rows_.find(id);
    if (it == rows_.end()) return std::nullopt;
    return it->second;
}

std::span<const float> CaptionIndex::vector(std::size_t row) const {
    if (row >= size()) throw std::out_of_range("CaptionIndex::vector");
    return std::span<const float>(vectors_).subspan(row * dim_, dim_);
}

std::set<CaptionGranularity> CaptionIndex::granularities() const {
    std::set<CaptionGranularity> out;
    for (const auto& c : captions_) out.insert(c.granularity);
    return out;
}

std::vector<float> CaptionIndex::scores(std::span<const float> query) const {
    if (empty()) return {};
    if (query.size() != dim_) {
        throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                    " != index dimension " + std::to_string(dim_));
    }
    std::vector<float> out(size());
    simd::dot_rows(query, vectors_, dim_, out);
    return out;
}

std::vector<RankedCaption> CaptionIndex::search(std::span<const float> query, std::size_t n) const {
    const auto raw = scores(query);
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        if (raw[a] != raw[b]) return raw[a] > raw[b];
        const auto& ea = earliest_[a];
        const auto& eb = earliest_[b];
        if (ea != eb) {
            if (!ea) return false;
            if (!eb) return true;
            return *ea < *eb;
        }
        return captions_[a].id < captions_[b].id;
    };
    const std::size_t take = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      better);
    std::vector<RankedCaption> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back({captions_[order[i]].id, static_cast<double>(raw[order[i]]), i + 1});
    }
    return out;
}

void CaptionIndex::save(const std::filesystem::path& stem) const {
    VectorStore store(dim_);
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t r = 0; r < size(); ++r) {
        store.add(captions_[r].id.str(), vector(r));
        auto entry = nlohmann::json::parse(caption_to_json_line(captions_[r]));
        entry["earliest"] = earliest_[r] ? nlohmann::json(earliest_[r]->iso()) : nlohmann::json();
        entries.push_back(std::move(entry));
    }
    store.save(std::filesystem::path(stem.string() + ".vemb"));
    nlohmann::json sidecar = {{"embedder", embedder_}, {"dimension", dim_}, {"captions", entries}};
    std::ofstream out(stem.string() + ".json", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + stem.string() + ".json");
    out << sidecar.dump(1) << '\n';
}

CaptionIndex CaptionIndex::load(const std::filesystem::path& stem) {
    const auto store = VectorStore::load(stem.string() + ".vemb");
    std::ifstream in(stem.string() + ".json", std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + stem.string() + ".json");
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad index sidecar " + stem.string() + ".json: " + e.what());
    }
    CaptionIndex index(sidecar.at("embedder").get<std::string>(),
                       sidecar.at("dimension").get<std::size_t>());
    const auto& entries = sidecar.at("captions");
    if (entries.size() != store.size()) {
        throw std::runtime_error("index sidecar lists " + std::to_string(entries.size()) +
                                 " captions but vector store holds " + std::to_string(store.size()));
    }
    for (std::size_t r = 0; r < entries.size(); ++r) {
        auto entry = entries[r];
        std::optional<Timestamp> earliest;
        if (entry.contains("earliest") && entry["earliest"].is_string()) {
            earliest = Timestamp::parse(entry["earliest"].get<std::string>());
        }
        entry.erase("earliest");
        Caption c = caption_from_json_line(entry.dump());
        if (store.id(r) != c.id.str()) {
            throw std::runtime_error("index sidecar and vector store disagree at row " + std::to_string(r));
        }
        index.add(std::move(c), store.row(r), earliest);
    }
    return index;
}

BuildIndexResult build_index(std::span<const Caption> captions, TextEmbedderClient& client,
                             const std::set<CaptionGranularity>& granularities,
                             const Corpus* corpus, const RetryPolicy& retry,
                             std::size_t parallelism) {
    if (granularities.empty()) throw std::invalid_argument("build_index: empty granularity filter");
    std::vector<const Caption*> selected;
    for (const auto& c : captions) {
        if (!granularities.contains(c.granularity)) continue;
        if (auto problem = validate_caption(c, corpus); !problem.empty()) {
            throw std::invalid_argument("build_index: " + problem);
        }
        selected.push_back(&c);
    }

    struct Slot {
        std::vector<float> vector;
        std::string warning;
        bool ok = false;
    };
    std::vector<Slot> slots(selected.size());
    detail::parallel_for(selected.size(), parallelism, [&](std::size_t i) {
        try {
            slots[i].vector = embed_caption(client, *selected[i], retry);
            slots[i].ok = true;
        } catch (const std::exception& e) {
            slots[i].warning = "caption '" + selected[i]->id.str() + "' excluded from index: " + e.what();
        }
    });

    BuildIndexResult result;
    result.index = CaptionIndex(client.model_name(), 0);
    std::optional<std::size_t> dim;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        if (!slots[i].ok) {
            spdlog::warn("{}", slots[i].warning);
            result.warnings.push_back(std::move(slots[i].warning));
            continue;
        }
        if (dim && *dim != slots[i].vector.size()) {
            throw std::runtime_error("build_index: embedder returned mixed dimensions (" +
                                     std::to_string(*dim) + " and " +
                                     std::to_string(slots[i].vector.size()) + ")");
        }
        dim = slots[i].vector.size();
        std::optional<Timestamp> earliest;
        if (corpus != nullptr) {
            for (const auto& f : selected[i]->frame_ids) {
                const auto ts = corpus->frame(f).timestamp;
                if (!earliest || ts < *earliest) earliest = ts;
            }
        }
        result.index.add(*selected[i], slots[i].vector, earliest);
    }
    if (result.index.empty()) result.index = CaptionIndex(client.model_name(), client.dimension());
    return result;
}

}  // namespace lifelog
