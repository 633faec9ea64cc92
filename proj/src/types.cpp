#include "epicast/types.hpp"

#include <stdexcept>

namespace epicast {

const char* to_string(SeriesKind kind) {
    return kind == SeriesKind::cases ? "cases" : "deaths";
}

namespace {

void check_pair(const std::string& region, const char* what, const CountVector& daily,
                const CountVector& cum) {
    if (daily.size() != cum.size()) {
        throw std::runtime_error("region " + region + ": " + what +
                                 " daily/cumulative length mismatch");
    }
    std::int64_t running = 0;
    for (Eigen::Index i = 0; i < daily.size(); ++i) {
        if (daily[i] < 0) {
            throw std::runtime_error("region " + region + ": negative " + what + " at index " +
                                     std::to_string(i));
        }
        running += daily[i];
        if (cum[i] != running) {
            throw std::runtime_error("region " + region + ": cumulative " + what +
                                     " breaks the prefix-sum identity at index " +
                                     std::to_string(i));
        }
    }
}

}  // namespace

void RegionSeries::validate() const {
    if (region_id.empty()) throw std::runtime_error("region with empty id");
    if (daily_cases.size() == 0) {
        throw std::runtime_error("region " + region_id + ": empty series");
    }
    if (population < 1) {
        throw std::runtime_error("region " + region_id + ": population must be >= 1");
    }
    if (daily_deaths.size() != daily_cases.size()) {
        throw std::runtime_error("region " + region_id +
                                 ": cases and deaths cover different day spans");
    }
    check_pair(region_id, "cases", daily_cases, cum_cases);
    check_pair(region_id, "deaths", daily_deaths, cum_deaths);
}

CountVector daily_to_cumulative(const CountVector& daily) {
    CountVector cum(daily.size());
    std::int64_t running = 0;
    for (Eigen::Index i = 0; i < daily.size(); ++i) {
        running += daily[i];
        cum[i] = running;
    }
    return cum;
}

}  // namespace epicast
