#pragma once

#include <string>
#include <string_view>

namespace epicast {

/// Calendar day as a count of days since 1970-01-01.
using Day = long;

/// Parse an ISO-8601 date (YYYY-MM-DD). Throws std::invalid_argument on
/// malformed input or impossible dates.
Day parse_date(std::string_view iso);

std::string format_date(Day day);

/// 0 = Sunday ... 6 = Saturday.
int weekday_of(Day day);

}  // namespace epicast
