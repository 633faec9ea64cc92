#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "epicast/config.hpp"
#include "epicast/growth.hpp"
#include "epicast/rng.hpp"
#include "epicast/simulate.hpp"
#include "epicast/types.hpp"

namespace epicast::deaths {

/// One grid point of the deaths tuning triple: the case moving-average
/// window and a logit-scale floor/ceiling on the fatality-ratio forecast.
struct DeathTuningCandidate {
    int nu = 7;
    double theta_lower = 0.0;
    double theta_upper = 0.0;
};

/// Discrete joint distribution over the deaths tuning grid.
struct DeathTuningPosterior {
    std::vector<DeathTuningCandidate> candidates;
    Vector distances;  // held-out squared-error distance per candidate
    Vector probs;      // normalized inverse distances, sum 1
};

/// Mean of the `nu` values ending at `t` (inclusive). Throws when the
/// window does not fit (`t < nu - 1`) or the index is out of range.
double moving_average(const Vector& series, int nu, Eigen::Index t);

/// Fatality-ratio history for one averaging window: the raw ratio of deaths
/// to the nu-day case moving average, its clamped logit, and the clamp
/// threshold (0.95 times the smallest positive ratio; 0.95/29 when every
/// ratio is zero, matching the all-zero sampling branch's 1-in-29 prior).
/// Days without nu days of history or with zero case mass hold NaN.
/// Returns nullopt when no day is evaluable.
std::optional<growth::GrowthSeries> cfr_series(const CountVector& daily_deaths,
                                               const CountVector& daily_cases, int nu);

/// Floor/ceiling clamp of the logit-scale trend prediction.
double gamma_forecast(double trend_t, const DeathTuningCandidate& cand);

/// Case moving average feeding the death forecast for horizon day k: the
/// window of `nu` days ending at day T + max(0, k - nu), so the first
/// forecast value enters the window only at k = nu + 1. Days at or before
/// T read the observed series; later days read the sample's forecast path.
double spliced_case_ma(const CountVector& observed_daily, const CountVector& forecast_path,
                       int k, int nu);

/// Posterior over (nu, theta_lower, theta_upper). Per window size: ratios
/// and their trend regression on the 28-day training window, theta floors
/// and ceilings from training-ratio quantiles (exact ties widened by 0.5
/// each way, duplicates dropped), and inverse-squared-distance scores on
/// the held-out 14 days. Window sizes without enough defined ratios are
/// skipped; nullopt when the history is too short or nothing survives.
std::optional<DeathTuningPosterior> fit_death_tuning(const RegionSeries& series,
                                                     const EngineConfig& config);

/// Output of the deaths pipeline; sample s is conditioned on case path s.
struct DeathForecast {
    simulate::Regime regime = simulate::Regime::full;
    ForecastEnsemble ensemble;  // sampled counts, S x K
    std::optional<DeathTuningPosterior> posterior;
};

/// Run the deaths pipeline on an outlier-adjusted series, conditioning on
/// the retained case sample paths: classify the deaths tail, fit the
/// tuning posterior, refit the ratio trend per window size on the last 28
/// days, then per sample draw a candidate and push the spliced case moving
/// average through the clamped ratio (rounded to whole counts). Sparse
/// tails and thin ratio histories fall back exactly like the cases model.
DeathForecast forecast_deaths(const RegionSeries& series, const simulate::CaseForecast& cases,
                              const EngineConfig& config, std::uint64_t seed);

}  // namespace epicast::deaths
