#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lifelog {

class TimestampError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wall-clock instant at minute precision, remembering the UTC offset it was
/// recorded with. Ordering and equality use the UTC instant first, then the
/// offset, so two renderings of the same instant still sort deterministically.
class Timestamp {
public:
    Timestamp() = default;
    Timestamp(std::int64_t utc_minutes, int offset_minutes)
        : utc_minutes_(utc_minutes), offset_minutes_(offset_minutes) {}

    /// Accepts `YYYY-MM-DD[T ]HH:MM[:SS[.fff]]` followed by `Z`, `±HH:MM` or
    /// `±HHMM`. Seconds are truncated. Throws TimestampError.
    static Timestamp parse(std::string_view text);

    /// Builds a timestamp from local calendar fields.
    static Timestamp from_local(int year, unsigned month, unsigned day, unsigned hour,
                                unsigned minute, int offset_minutes);

    std::int64_t utc_minutes() const noexcept { return utc_minutes_; }
    int offset_minutes() const noexcept { return offset_minutes_; }

    /// `2016-08-15T18:14+01:00`
    std::string iso() const;
    /// Local `18:14`.
    std::string local_time() const;
    /// Local `2016-08-15`.
    std::string local_date() const;

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

private:
    std::int64_t utc_minutes_ = 0;
    int offset_minutes_ = 0;
};

}  // namespace lifelog
