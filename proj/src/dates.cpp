#include "epicast/dates.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace epicast {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

}  // namespace

Day parse_date(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' ||
        !all_digits(iso.substr(0, 4)) || !all_digits(iso.substr(5, 2)) ||
        !all_digits(iso.substr(8, 2))) {
        throw std::invalid_argument("malformed date '" + std::string(iso) +
                                    "', expected YYYY-MM-DD");
    }
    const int y = (iso[0] - '0') * 1000 + (iso[1] - '0') * 100 + (iso[2] - '0') * 10 + (iso[3] - '0');
    const unsigned m = static_cast<unsigned>((iso[5] - '0') * 10 + (iso[6] - '0'));
    const unsigned d = static_cast<unsigned>((iso[8] - '0') * 10 + (iso[9] - '0'));
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) {
        throw std::invalid_argument("impossible date '" + std::string(iso) + "'");
    }
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_date(Day day) {
    const std::chrono::sys_days sd{std::chrono::days{day}};
    const std::chrono::year_month_day ymd{sd};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int weekday_of(Day day) {
    const std::chrono::sys_days sd{std::chrono::days{day}};
    return static_cast<int>(std::chrono::weekday{sd}.c_encoding());
}

}  // namespace epicast
