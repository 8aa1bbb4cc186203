#include "lifelog/mock_clients.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lifelog/captions.hpp"

namespace lifelog {

namespace {

constexpr std::string_view kFiller[] = {
    "ambient", "light",   "steady", "pace",    "nearby", "surroundings", "calm",    "ordinary",
    "routine", "view",    "detail", "quiet",   "brief",  "background",   "angle",   "gentle",
    "soft",    "usual",   "simple", "shadows", "colour", "texture",      "distant", "moment",
};

// Function words plus the phrasing shared by every mock caption and topic.
// Together with the filler vocabulary they carry no content, so the mock
// embedder ignores them the way a semantic model would.
constexpr std::string_view kStopwords[] = {
    "a",    "an",         "the",  "of",   "in",   "on",    "at",   "to",       "and",   "is",
    "s",    "with",       "for",  "this", "it",   "by",    "was",  "were",     "then",  "while",
    "over", "individual", "find", "when", "that", "where", "they", "stretch",  "moments",
    "experience"};

bool ignored_token(std::string_view tok) {
    return std::find(std::begin(kStopwords), std::end(kStopwords), tok) != std::end(kStopwords) ||
           std::find(std::begin(kFiller), std::end(kFiller), tok) != std::end(kFiller);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageReadError("cannot read image " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !ignored_token(cur)) out.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::string join_unique_runs(const std::vector<std::string>& scenes, std::string_view sep,
                             std::size_t limit = SIZE_MAX) {
    std::string out;
    std::string last;
    std::size_t n = 0;
    for (const auto& s : scenes) {
        if (s == last) continue;
        if (n++ == limit) break;
        if (!out.empty()) out.append(sep);
        out.append(s);
        last = s;
    }
    return out;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<float> hashed_gaussian(std::string_view key, std::uint64_t seed, std::size_t dimension) {
    std::mt19937_64 rng(fnv1a(key) ^ (seed * 0x9e3779b97f4a7c15ULL));
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    std::vector<float> v(dimension);
    for (std::size_t i = 0; i < dimension; i += 2) {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double t = 2.0 * std::numbers::pi * uniform();
        v[i] = static_cast<float>(r * std::cos(t));
        if (i + 1 < dimension) v[i + 1] = static_cast<float>(r * std::sin(t));
    }
    return v;
}

std::string read_scene(const std::filesystem::path& image) {
    const auto bytes = slurp(image);
    auto line = trim(bytes.substr(0, bytes.find('\n')));
    const bool printable = !line.empty() && std::all_of(line.begin(), line.end(), [](unsigned char c) {
        return c >= 0x20 && c < 0x7f;
    });
    return printable ? line : image.stem().string();
}

// ---------------------------------------------------------------------------

MockCaptioner::MockCaptioner(std::uint64_t seed, CaptionerCapabilities caps) : seed_(seed), caps_(caps) {}

void MockCaptioner::fail_frame(const FrameId& frame) {
    std::lock_guard lock(mu_);
    failing_.insert(frame);
}

void MockCaptioner::fail_frame_transiently(const FrameId& frame, int count) {
    std::lock_guard lock(mu_);
    transient_[frame] = count;
}

void MockCaptioner::return_malformed(int count) {
    std::lock_guard lock(mu_);
    malformed_ = count;
}

std::vector<std::string> MockCaptioner::prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
}

std::size_t MockCaptioner::calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
}

void MockCaptioner::check_failures(std::span<const ImageRef> images) {
    for (const auto& img : images) {
        if (failing_.contains(img.frame)) throw TransportError("mock: frame " + img.frame.str() + " unavailable");
        if (auto it = transient_.find(img.frame); it != transient_.end() && it->second > 0) {
            --it->second;
            throw TransportError("mock: transient failure for " + img.frame.str());
        }
    }
}

namespace {

std::size_t padding(const std::string& head, std::size_t target) {
    const auto words = word_count(head);
    return words + 2 <= target ? target - words : 2;
}

}  // namespace

std::string MockCaptioner::filler(const std::string& key, std::size_t words) const {
    std::mt19937_64 rng(fnv1a(key) ^ seed_);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (!out.empty()) out.push_back(' ');
        out.append(kFiller[rng() % std::size(kFiller)]);
    }
    return out;
}

std::string MockCaptioner::describe_image(const std::string& prompt, const ImageRef& image) {
    {
        std::lock_guard lock(mu_);
        prompts_.push_back(prompt);
        check_failures(std::span(&image, 1));
    }
    const auto scene = read_scene(image.path);
    // Filler is keyed on the content so equal scenes get equal captions.
    return "The individual is " + scene + ". " + filler(scene, 22) + ".";
}

std::string MockCaptioner::describe_frames(const std::string& prompt, std::span<const ImageRef> images,
                                           ResponseFormat format) {
    bool malformed = false;
    {
        std::lock_guard lock(mu_);
        prompts_.push_back(prompt);
        check_failures(images);
        if (format == ResponseFormat::Json && malformed_ > 0) {
            --malformed_;
            malformed = true;
        }
    }
    std::vector<std::string> scenes;
    scenes.reserve(images.size());
    for (const auto& img : images) scenes.push_back(read_scene(img.path));
    if (format == ResponseFormat::Text) {
        // Pad towards 50 words so long scene lists stay inside the requested range.
        const auto head = "Over this stretch the individual is " + join_unique_runs(scenes, ", then ") + ".";
        return head + " " + filler(head + "/collective", padding(head, 50)) + ".";
    }
    if (malformed) return "{\"fine_grained\": [ this is not json";

    nlohmann::json fine = nlohmann::json::array();
    for (std::size_t i = 0; i < images.size(); ++i) {
        fine.push_back({{"image", "image_" + std::to_string(i + 1)},
                        {"caption", "The individual is " + scenes[i] + ". " +
                                        filler(scenes[i] + "/fine", 6) + "."}});
    }
    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t i = 0; i < images.size();) {
        std::size_t j = i;
        nlohmann::json members = nlohmann::json::array();
        while (j < images.size() && scenes[j] == scenes[i]) members.push_back("image_" + std::to_string(++j));
        groups.push_back({{"images", members},
                          {"caption", "For a while the individual is " + scenes[i] + "."}});
        i = j;
    }
    const auto summary_head = "The individual was " + join_unique_runs(scenes, ", then ", 3) + ".";
    nlohmann::json doc = {
        {"fine_grained", fine},
        {"summary", summary_head + " " + filler(summary_head + "/summary", padding(summary_head, 30)) + "."},
        {"groups", groups}};
    auto text = doc.dump(2);
    return fenced_ ? "```json\n" + text + "\n```" : text;
}

// ---------------------------------------------------------------------------

MockTextEmbedder::MockTextEmbedder(std::size_t dimension, std::uint64_t seed) : dim_(dimension), seed_(seed) {
    if (dimension == 0) throw std::invalid_argument("MockTextEmbedder: dimension must be positive");
}

void MockTextEmbedder::fail_text(const std::string& text) {
    std::lock_guard lock(mu_);
    failing_.insert(text);
}

std::vector<std::string> MockTextEmbedder::received() const {
    std::lock_guard lock(mu_);
    return received_;
}

std::vector<float> MockTextEmbedder::embed_text(const std::string& text) {
    {
        std::lock_guard lock(mu_);
        received_.push_back(text);
        if (failing_.contains(text)) throw TransportError("mock: cannot embed text");
    }
    // A small constant component keeps token-free texts away from the zero vector.
    std::vector<float> out = hashed_gaussian("<bias>", seed_, dim_);
    for (auto& x : out) x *= 0.05f;
    for (const auto& tok : tokenize(text)) {
        const auto g = hashed_gaussian(tok, seed_, dim_);
        for (std::size_t i = 0; i < dim_; ++i) out[i] += g[i];
    }
    return out;
}

// ---------------------------------------------------------------------------

MockVisionEmbedder::MockVisionEmbedder(std::size_t dimension, std::uint64_t seed) : dim_(dimension), seed_(seed) {
    if (dimension == 0) throw std::invalid_argument("MockVisionEmbedder: dimension must be positive");
}

std::vector<float> MockVisionEmbedder::embed_image(const ImageRef& image) {
    const auto bytes = slurp(image.path);
    auto out = hashed_gaussian(read_scene(image.path), seed_, dim_);
    const auto noise = hashed_gaussian(bytes, seed_ + 1, dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] += 0.2f * noise[i];
    return out;
}

TableVisionEmbedder::TableVisionEmbedder(std::map<FrameId, std::vector<float>> table) : table_(std::move(table)) {
    for (const auto& [id, v] : table_) {
        if (dim_ == 0) dim_ = v.size();
        if (v.size() != dim_) throw std::invalid_argument("TableVisionEmbedder: mixed dimensions");
    }
}

std::vector<float> TableVisionEmbedder::embed_image(const ImageRef& image) {
    auto it = table_.find(image.frame);
    if (it == table_.end()) throw ImageReadError("no vector for frame " + image.frame.str());
    return it->second;
}

// ---------------------------------------------------------------------------

std::vector<CaptionId> IdentityReranker::rerank(const std::string&, std::span<const RerankCandidate> candidates,
                                                std::size_t out_count) {
    std::vector<CaptionId> out;
    for (std::size_t i = 0; i < candidates.size() && i < out_count; ++i) out.push_back(candidates[i].id);
    return out;
}

std::vector<CaptionId> ReverseReranker::rerank(const std::string&, std::span<const RerankCandidate> candidates,
                                               std::size_t out_count) {
    std::vector<CaptionId> out;
    for (auto it = candidates.rbegin(); it != candidates.rend() && out.size() < out_count; ++it) {
        out.push_back(it->id);
    }
    return out;
}

std::vector<CaptionId> ScriptedReranker::rerank(const std::string& topic,
                                                std::span<const RerankCandidate> candidates, std::size_t) {
    topic_ = topic;
    pool_size_ = candidates.size();
    return answer_;
}

}  // namespace lifelog
