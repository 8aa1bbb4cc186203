#include "lifelog/timestamp.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace lifelog {

namespace {

// Civil-date conversions (proleptic Gregorian), days relative to 1970-01-01.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    unsigned digits(std::size_t count, const char* what) {
        if (pos_ + count > text_.size()) fail(what);
        unsigned value = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const char c = text_[pos_ + i];
            if (!std::isdigit(static_cast<unsigned char>(c))) fail(what);
            value = value * 10 + static_cast<unsigned>(c - '0');
        }
        pos_ += count;
        return value;
    }

    void expect(char c, const char* what) {
        if (pos_ >= text_.size() || text_[pos_] != c) fail(what);
        ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    bool done() const { return pos_ == text_.size(); }

    [[noreturn]] void fail(const char* what) const {
        throw TimestampError("invalid timestamp '" + std::string(text_) + "': expected " + what);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Timestamp Timestamp::from_local(int year, unsigned month, unsigned day, unsigned hour,
                                unsigned minute, int offset_minutes) {
    const std::int64_t days = days_from_civil(year, month, day);
    const std::int64_t local = days * 1440 + hour * 60 + minute;
    return Timestamp(local - offset_minutes, offset_minutes);
}

Timestamp Timestamp::parse(std::string_view text) {
    Cursor c(text);
    const unsigned year = c.digits(4, "4-digit year");
    c.expect('-', "'-' after year");
    const unsigned month = c.digits(2, "2-digit month");
    c.expect('-', "'-' after month");
    const unsigned day = c.digits(2, "2-digit day");
    if (!c.accept('T') && !c.accept(' ')) c.fail("'T' between date and time");
    const unsigned hour = c.digits(2, "2-digit hour");
    c.expect(':', "':' after hour");
    const unsigned minute = c.digits(2, "2-digit minute");
    if (c.accept(':')) {
        (void)c.digits(2, "2-digit second");
        if (c.accept('.')) {
            while (std::isdigit(static_cast<unsigned char>(c.peek()))) (void)c.digits(1, "digit");
        }
    }
    int offset = 0;
    if (c.accept('Z')) {
        offset = 0;
    } else {
        int sign = 0;
        if (c.accept('+')) {
            sign = 1;
        } else if (c.accept('-')) {
            sign = -1;
        } else {
            c.fail("UTC offset ('Z' or +HH:MM)");
        }
        const unsigned oh = c.digits(2, "2-digit offset hours");
        c.accept(':');
        const unsigned om = c.digits(2, "2-digit offset minutes");
        if (oh > 18 || om > 59) c.fail("offset within +-18:00");
        offset = sign * static_cast<int>(oh * 60 + om);
    }
    if (!c.done()) c.fail("end of input");

    if (month < 1 || month > 12) c.fail("month in 1..12");
    static constexpr unsigned kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    const unsigned max_day = (month == 2 && !leap) ? 28 : kDays[month - 1];
    if (day < 1 || day > max_day) c.fail("valid day of month");
    if (hour > 23) c.fail("hour in 0..23");
    if (minute > 59) c.fail("minute in 0..59");

    return from_local(static_cast<int>(year), month, day, hour, minute, offset);
}

std::string Timestamp::iso() const {
    const std::int64_t local = utc_minutes_ + offset_minutes_;
    const std::int64_t days = floor_div(local, 1440);
    const auto minute_of_day = static_cast<int>(local - days * 1440);
    const Civil civil = civil_from_days(days);
    const int off = offset_minutes_ < 0 ? -offset_minutes_ : offset_minutes_;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d%c%02d:%02d",
                  static_cast<long long>(civil.year), civil.month, civil.day, minute_of_day / 60,
                  minute_of_day % 60, offset_minutes_ < 0 ? '-' : '+', off / 60, off % 60);
    return buf;
}

std::string Timestamp::local_time() const {
    return iso().substr(11, 5);
}

std::string Timestamp::local_date() const {
    return iso().substr(0, 10);
}

}  // namespace lifelog
