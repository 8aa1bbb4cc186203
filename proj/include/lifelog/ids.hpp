#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <utility>

namespace lifelog {

/// Opaque string identifier, distinct per Tag so frame, segment and caption
/// ids cannot be mixed up.
template <typename Tag>
class StrongId {
public:
    StrongId() = default;
    explicit StrongId(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend bool operator==(const StrongId&, const StrongId&) = default;
    friend auto operator<=>(const StrongId&, const StrongId&) = default;

    friend std::ostream& operator<<(std::ostream& os, const StrongId& id) {
        return os << id.value_;
    }

private:
    std::string value_;
};

struct FrameIdTag {};
struct SegmentIdTag {};
struct CaptionIdTag {};

using FrameId = StrongId<FrameIdTag>;
using SegmentId = StrongId<SegmentIdTag>;
using CaptionId = StrongId<CaptionIdTag>;

}  // namespace lifelog

template <typename Tag>
struct std::hash<lifelog::StrongId<Tag>> {
    std::size_t operator()(const lifelog::StrongId<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
