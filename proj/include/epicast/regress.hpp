#pragma once

#include <array>

#include "epicast/types.hpp"

namespace epicast::regress {

/// Weighted trend + weekday fit on a logit-scale series. beta holds
/// 8 coefficients: intercept, slope per day, and Monday..Saturday offsets
/// (Sunday is the reference level); excluded terms are exactly zero.
struct RegressionFit {
    Vector beta;            // size 8
    bool has_trend = false;
    bool has_dow = false;
    Vector weights;         // one per training point, mean 1
    double t0 = 0.0;        // time covariate is centered here (last training day)
};

/// Cook's distance per observation for an unweighted least-squares fit of
/// y on `design` (full column rank, more rows than columns). Exact leverage
/// points (hat value 1) receive the maximum finite distance.
Vector cooks_distance(const Matrix& design, const Vector& y);

/// Three stages: an unweighted fit measures influence, Cook's distances
/// become inverse weights (floored at one hundredth of their median and
/// normalized to mean one), and AIC picks among intercept-only,
/// intercept+trend, intercept+weekday, and the full model.
/// `t` are day numbers, `dow` weekdays (0 = Sunday), `y` the responses.
/// Throws for fewer than 10 points or fewer than 2 distinct days.
RegressionFit fit_dow_trend(const std::vector<long>& t, const std::vector<int>& dow,
                            const Vector& y);

/// beta0 + beta1 (t - t0) + weekday offset.
double predict(const RegressionFit& fit, double t, int dow);

/// Additive weekday offsets; index 0 (Sunday) is always 0, and all entries
/// are 0 when the weekday block was not selected.
std::array<double, 7> dow_offsets(const RegressionFit& fit);

}  // namespace epicast::regress
