#include "lifelog/vector_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lifelog {

namespace {

constexpr char kMagic[4] = {'V', 'E', 'M', 'B'};

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw VectorStoreError(std::string("truncated vector store while reading ") + what);
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

VectorStore load_binary(std::istream& in, const std::filesystem::path& path) {
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw VectorStoreError("bad magic in " + path.string());
    const auto version = get_le<std::uint32_t>(in, "version");
    if (version != VectorStore::kVersion) {
        throw VectorStoreError("unsupported vector store version " + std::to_string(version));
    }
    const auto dim = get_le<std::uint32_t>(in, "dimension");
    const auto count = get_le<std::uint64_t>(in, "count");
    VectorStore store(dim);
    std::vector<float> vec(dim);
    for (std::uint64_t r = 0; r < count; ++r) {
        const auto len = get_le<std::uint32_t>(in, "id length");
        std::string id(len, '\0');
        if (!in.read(id.data(), len)) throw VectorStoreError("truncated id in record " + std::to_string(r));
        for (std::uint32_t d = 0; d < dim; ++d) vec[d] = std::bit_cast<float>(get_le<std::uint32_t>(in, "vector"));
        store.add(std::move(id), vec);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw VectorStoreError("trailing bytes after " + std::to_string(count) + " records in " +
                               path.string());
    }
    return store;
}

VectorStore load_jsonl(std::istream& in) {
    VectorStore store;
    std::string line;
    std::size_t lineno = 0;
    std::vector<float> vec;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto obj = nlohmann::json::parse(line);
            vec = obj.at("vector").get<std::vector<float>>();
            store.add(obj.at("id").get<std::string>(), vec);
        } catch (const nlohmann::json::exception& e) {
            throw VectorStoreError("vector store line " + std::to_string(lineno) + ": " + e.what());
        } catch (const VectorStoreError& e) {
            throw VectorStoreError("vector store line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return store;
}

}  // namespace

void VectorStore::add(std::string id, std::span<const float> vector) {
    if (empty() && dim_ == 0) dim_ = vector.size();
    if (vector.size() != dim_ || dim_ == 0) {
        throw VectorStoreError("vector for '" + id + "' has dimension " + std::to_string(vector.size()) +
                               ", store expects " + std::to_string(dim_));
    }
    for (float v : vector) {
        if (!std::isfinite(v)) throw VectorStoreError("vector for '" + id + "' has a non-finite value");
    }
    if (!index_.emplace(id, ids_.size()).second) throw VectorStoreError("duplicate id '" + id + "'");
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), vector.begin(), vector.end());
}

std::span<const float> VectorStore::row(std::size_t i) const {
    if (i >= ids_.size()) throw std::out_of_range("VectorStore::row");
    return std::span<const float>(data_).subspan(i * dim_, dim_);
}

std::optional<std::size_t> VectorStore::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void VectorStore::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw VectorStoreError("cannot write " + path.string());
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    put_le<std::uint64_t>(out, ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ids_[r].size()));
        out.write(ids_[r].data(), static_cast<std::streamsize>(ids_[r].size()));
        for (float v : row(r)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw VectorStoreError("write failed: " + path.string());
}

void VectorStore::save_jsonl(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw VectorStoreError("cannot write " + path.string());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        const auto v = row(r);
        nlohmann::json obj = {{"id", ids_[r]}, {"vector", std::vector<float>(v.begin(), v.end())}};
        out << obj.dump() << '\n';
    }
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw VectorStoreError("cannot open " + path.string());
    char head[4] = {};
    in.read(head, 4);
    const bool binary = in.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0;
    in.clear();
    in.seekg(0);
    return binary ? load_binary(in, path) : load_jsonl(in);
}

}  // namespace lifelog
