#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lifelog {

class VectorStoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major table of equal-length float vectors keyed by string id.
///
/// Binary layout (all integers and floats little-endian):
///
///     "VEMB"  u32 version(=1)  u32 dim  u64 count
///     count x { u32 id_len, id_len bytes UTF-8 id, dim x f32 }
///
/// A JSON Lines variant with one `{"id": str, "vector": [f32...]}` per line
/// is accepted on read.
class VectorStore {
public:
    static constexpr std::uint32_t kVersion = 1;

    VectorStore() = default;
    explicit VectorStore(std::size_t dimension) : dim_(dimension) {}

    std::size_t dimension() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    /// Throws VectorStoreError on dimension mismatch, duplicate id or
    /// non-finite values. The first add fixes the dimension of an empty store
    /// created with dimension 0.
    void add(std::string id, std::span<const float> vector);

    const std::string& id(std::size_t row) const { return ids_.at(row); }
    std::span<const float> row(std::size_t i) const;
    std::optional<std::size_t> find(const std::string& id) const;
    std::span<const float> data() const noexcept { return data_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    void save(const std::filesystem::path& path) const;
    void save_jsonl(const std::filesystem::path& path) const;
    /// Detects the format from the first bytes.
    static VectorStore load(const std::filesystem::path& path);

    friend bool operator==(const VectorStore&, const VectorStore&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace lifelog
