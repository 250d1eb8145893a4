#include "operkit/timeutil.hpp"

#include "operkit/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace operkit {

namespace {

int parse_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole)
{
    if (pos + len > s.size()) {
        throw InputError("malformed timestamp: " + std::string(whole));
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, value);
    if (ec != std::errc{} || ptr != s.data() + pos + len) {
        throw InputError("malformed timestamp: " + std::string(whole));
    }
    return value;
}

void expect_char(std::string_view s, std::size_t pos, char c, std::string_view whole)
{
    if (pos >= s.size() || s[pos] != c) {
        throw InputError("malformed timestamp: " + std::string(whole));
    }
}

} // namespace

std::string format_iso8601(TimePoint tp)
{
    using namespace std::chrono;
    const auto day = floor<days>(tp);
    const year_month_day ymd{day};
    const auto in_day = tp - day;
    const auto h = duration_cast<hours>(in_day);
    const auto m = duration_cast<minutes>(in_day - h);
    const auto s = duration_cast<seconds>(in_day - h - m);
    const auto ms = (in_day - h - m - s).count();

    char buf[40];
    if (ms == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<int>(h.count()), static_cast<int>(m.count()), static_cast<int>(s.count()));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<int>(h.count()), static_cast<int>(m.count()), static_cast<int>(s.count()),
                      static_cast<int>(ms));
    }
    return buf;
}

TimePoint parse_iso8601(std::string_view text)
{
    using namespace std::chrono;
    const int y = parse_int(text, 0, 4, text);
    expect_char(text, 4, '-', text);
    const int mo = parse_int(text, 5, 2, text);
    expect_char(text, 7, '-', text);
    const int d = parse_int(text, 8, 2, text);
    expect_char(text, 10, 'T', text);
    const int hh = parse_int(text, 11, 2, text);
    expect_char(text, 13, ':', text);
    const int mm = parse_int(text, 14, 2, text);
    expect_char(text, 16, ':', text);
    const int ss = parse_int(text, 17, 2, text);

    std::size_t pos = 19;
    long millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        long scale = 100;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits < 3) {
                millis += (text[pos] - '0') * scale;
                scale /= 10;
            }
            ++digits;
            ++pos;
        }
        if (digits == 0 || digits > 9) {
            throw InputError("malformed timestamp: " + std::string(text));
        }
    }
    expect_char(text, pos, 'Z', text);
    if (pos + 1 != text.size()) {
        throw InputError("malformed timestamp: " + std::string(text));
    }

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
        throw InputError("invalid calendar time: " + std::string(text));
    }
    return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} + Millis{millis};
}

TimePoint add_seconds(TimePoint tp, double seconds)
{
    return tp + Millis{std::llround(seconds * 1000.0)};
}

double seconds_of_day(TimePoint tp)
{
    using namespace std::chrono;
    const auto in_day = tp - floor<days>(tp);
    return static_cast<double>(in_day.count()) / 1000.0;
}

TimePoint midnight_of(TimePoint tp)
{
    return std::chrono::floor<std::chrono::days>(tp);
}

std::string format_hhmm(double hours_of_day)
{
    long minutes = std::lround(hours_of_day * 60.0);
    minutes %= 24 * 60;
    if (minutes < 0) {
        minutes += 24 * 60;
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02ld:%02ld", minutes / 60, minutes % 60);
    return buf;
}

int parse_hhmm(std::string_view text)
{
    if (text.size() != 5 || text[2] != ':') {
        throw InputError("expected hh:mm, got '" + std::string(text) + "'");
    }
    const int h = parse_int(text, 0, 2, text);
    const int m = parse_int(text, 3, 2, text);
    if (h > 23 || m > 59) {
        throw InputError("clock time out of range: " + std::string(text));
    }
    return h * 60 + m;
}

} // namespace operkit
