#pragma once

#include <cstdint>
#include <optional>

#include "epicast/blend.hpp"
#include "epicast/config.hpp"
#include "epicast/growth.hpp"
#include "epicast/rng.hpp"
#include "epicast/types.hpp"

namespace epicast::simulate {

/// Sampling branch selected by the trailing 28 observed days.
enum class Regime { full, sparse_empirical, sparse_bernoulli };

const char* to_string(Regime regime);

/// Branch rule on the last 28 days: all zero -> sparse_bernoulli, more than
/// 14 zero days -> sparse_empirical, otherwise (14+ days with at least one
/// count) -> full.
Regime classify_regime(const CountVector& tail28);

/// A sparse-regime path of `horizon` iid draws: resampling with replacement
/// from the 28 tail values (empirical), or 0/1 flips with success
/// probability 1/29 (bernoulli).
CountVector sample_sparse(Regime regime, const CountVector& tail28,
                          rng::Stream& stream, Eigen::Index horizon);

/// Compartment bookkeeping for one sample path. s0 is the initial
/// susceptible pool (attack rate times population) and never changes;
/// susceptible + cum_cases == s0 holds at every step.
struct SimulationState {
    double cum_cases = 0.0;
    double susceptible = 0.0;
    double s0 = 0.0;
};

/// Advance one day at the given per-day rate: new cases are
/// rate * (susceptible / s0) * cum_cases, capped at the remaining
/// susceptibles so the pool can never go negative. Updates the state in
/// place and returns the day's new cases.
double si_step(SimulationState& state, double rate);

/// Overdispersion fit for counts with known means: variance is
/// mean * (1 + alpha), so alpha == 0 is the Poisson limit.
struct DispersionEstimate {
    double alpha_hat = 0.0;
    double loglik = 0.0;
    Eigen::Index points = 0;  // observations in the fitting window
};

/// Joint log-likelihood of the counts under independent negative binomials
/// with the given means and shared overdispersion alpha. alpha at or below
/// the search floor evaluates the limiting Poisson likelihood.
double nb_loglik(const CountVector& observed, const Vector& means, double alpha);

/// Maximum-likelihood alpha over [1e-8, 1e4], by golden-section search on
/// the unimodal profile, to an interval width of 1e-8. Counts that equal
/// their means exactly report the floor (Poisson) directly. Needs at least
/// 8 points and strictly positive means.
DispersionEstimate estimate_dispersion(const CountVector& observed, const Vector& means);

/// One count with the given mean and variance mean * (1 + alpha), drawn as
/// a gamma-Poisson mixture. alpha at or below 1e-8 degenerates to
/// Poisson(mean); a non-positive mean returns 0 outright.
std::int64_t nb_sample(double mean, double alpha, rng::Stream& stream);

/// Output of the cases pipeline. The sampled counts live in `ensemble`;
/// `expected` keeps each sample's deterministic daily means and
/// `attack_rates` its attack-rate draw (full regime only) so the deaths
/// model and diagnostics can condition on the same paths. The optional
/// members are absent when the sparse branches skip those stages.
struct CaseForecast {
    Regime regime = Regime::full;
    ForecastEnsemble ensemble;  // sampled counts, S x K
    Matrix expected;            // per-sample daily means, S x K
    Vector attack_rates;        // per-sample attack rate, length S
    std::optional<growth::GrowthSeries> rates;
    std::optional<blend::SplitWindows> split;
    std::optional<blend::TuningPosterior> posterior;
    std::optional<DispersionEstimate> dispersion;
};

/// Run the whole cases pipeline on an outlier-adjusted series: classify the
/// regime, fit the tuning posterior on the 28/14 train/test split, refit
/// the trend on the last 28 days, then draw `config.samples` paths of
/// `config.horizon` days. Falls back to the empirical branch when the rate
/// history is too thin to support the posterior (under 42 days, or too few
/// defined rates). Every sample uses its own stream derived from
/// (seed, region, sample index), so results do not depend on scheduling.
CaseForecast forecast_cases(const RegionSeries& series, const EngineConfig& config,
                            std::uint64_t seed);

}  // namespace epicast::simulate
