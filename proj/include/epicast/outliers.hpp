#pragma once

#include <vector>

#include "epicast/config.hpp"
#include "epicast/types.hpp"

namespace epicast::outliers {

/// Verdict of the five-detector vote over one daily series.
struct OutlierReport {
    Eigen::VectorXi votes;       // 0..5 per day
    std::vector<bool> flags;     // votes >= threshold
    CountVector adjusted;        // replacements at flagged days, original elsewhere
};

/// Number of votes (0..5) each day receives from the five detectors:
/// a Hampel filter, a weekday-stratified z-score on log1p counts, an IQR
/// fence and a generalized ESD test on moving-average residuals, and
/// studentized residuals from a trend-plus-weekday fit on log1p counts.
/// `first_weekday` is the weekday (0 = Sunday) of daily[0].
/// Throws when the series is shorter than 14 days.
Eigen::VectorXi detect_outliers(const CountVector& daily, int first_weekday,
                                const OutlierConfig& cfg = {});

/// Replace every day with votes >= cfg.vote_threshold by the rounded,
/// non-negative weekday-stratified rolling median of its unflagged
/// neighbours (falling back to a plain centered rolling median when the
/// stratum is thin). Unflagged days pass through untouched.
OutlierReport adjust_outliers(const CountVector& daily, const Eigen::VectorXi& votes,
                              const OutlierConfig& cfg = {});

/// Convenience: detect, then adjust.
OutlierReport clean_series(const CountVector& daily, int first_weekday,
                           const OutlierConfig& cfg = {});

}  // namespace epicast::outliers
