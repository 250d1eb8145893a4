#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace operkit {

using Millis = std::chrono::milliseconds;
using TimePoint = std::chrono::sys_time<Millis>;

// "YYYY-MM-DDThh:mm:ssZ", with ".mmm" appended only when the
// millisecond part is nonzero.
std::string format_iso8601(TimePoint tp);

// Accepts the output of format_iso8601 plus an optional fractional part
// of 1..9 digits (truncated to milliseconds). Throws InputError.
TimePoint parse_iso8601(std::string_view text);

// Adds fractional seconds, rounded to the nearest millisecond.
TimePoint add_seconds(TimePoint tp, double seconds);

// Seconds elapsed since UTC midnight of the same day, in [0, 86400).
double seconds_of_day(TimePoint tp);

TimePoint midnight_of(TimePoint tp);

// Clock time "hh:mm" for a time of day expressed in hours; wraps mod 24
// and rounds to the nearest minute.
std::string format_hhmm(double hours_of_day);

// Parses "hh:mm" into minutes after midnight. Throws InputError.
int parse_hhmm(std::string_view text);

} // namespace operkit
