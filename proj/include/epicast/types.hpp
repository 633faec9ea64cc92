#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "epicast/dates.hpp"

namespace epicast {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class SeriesKind { cases, deaths };

const char* to_string(SeriesKind kind);

/// One region's observed daily and cumulative counts over a contiguous span
/// of calendar days. `clamped_*` mark days whose daily value was floored at 0
/// while differencing a cumulative series that was revised downward.
struct RegionSeries {
    std::string region_id;
    Day start_day = 0;
    CountVector daily_cases;
    CountVector cum_cases;
    CountVector daily_deaths;
    CountVector cum_deaths;
    std::int64_t population = 0;
    std::vector<Eigen::Index> clamped_cases;
    std::vector<Eigen::Index> clamped_deaths;

    Eigen::Index size() const { return daily_cases.size(); }
    Day day_at(Eigen::Index i) const { return start_day + static_cast<Day>(i); }
    Day last_day() const { return day_at(size() - 1); }

    /// Throws std::runtime_error if any structural invariant fails
    /// (prefix-sum identity, non-negative counts, positive population).
    void validate() const;
};

CountVector daily_to_cumulative(const CountVector& daily);

/// S sample paths over K forecast days. Row s, column k holds the simulated
/// count for target day `first_target_day + k`.
struct ForecastEnsemble {
    SeriesKind kind = SeriesKind::cases;
    Day first_target_day = 0;
    CountMatrix samples;
    std::uint64_t seed = 0;

    Eigen::Index sample_count() const { return samples.rows(); }
    Eigen::Index horizon() const { return samples.cols(); }
};

}  // namespace epicast
