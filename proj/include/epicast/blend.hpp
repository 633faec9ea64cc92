#pragma once

#include <vector>

#include "epicast/rng.hpp"
#include "epicast/types.hpp"

namespace epicast::blend {

/// One grid point of the tuning triple.
struct TuningCandidate {
    double eta = 0.0;    // trend cap multiplier, in [0,1]
    double omega = 1.0;  // transition length, >= 1
    double phi = 1.0;    // damping endpoint, > 0
};

/// Discrete joint distribution over the tuning grid.
struct TuningPosterior {
    std::vector<TuningCandidate> candidates;
    Vector distances;  // test-window squared-error distance per candidate
    Vector probs;      // normalized inverse distances, sum 1
};

/// Train/test split over the trailing 42 days of a series whose last index
/// is `last`: 28 training days followed by 14 held-out days.
struct SplitWindows {
    Eigen::Index train_begin = 0, train_end = 0;  // inclusive
    Eigen::Index test_begin = 0, test_end = 0;    // inclusive
};
SplitWindows split_windows(Eigen::Index last);

/// Weight of the trend component k days past the training end:
/// 1 - ((k-1)/omega)^2 while k <= omega+1, afterwards 0.
double transition_weight(int k, double omega);

/// Damping multiplier 1 + k(phi-1)/30, floored at 1e-6.
double damping(int k, double phi);

/// Cap for the trend component: median of the last seven training values
/// times eta.
double eta_cap(const Vector& train_logit_tail, double eta);

/// The blended logit-scale forecast rate at horizon day k. Components with
/// zero weight are dropped outright so an unused non-finite input cannot
/// poison the result.
double kappa_forecast(int k, double trend_k, double constant_dow_k,
                      const TuningCandidate& cand, double eta_star);

/// Cross product of the three grids in (eta, omega, phi) order.
std::vector<TuningCandidate> make_grid(const std::vector<double>& etas,
                                       const std::vector<double>& omegas,
                                       const std::vector<double>& phis);

/// Everything the posterior fit needs about one region's held-out window:
/// 14 observed raw rates (NaN where undefined), the two component
/// predictions per held-out day, and the median of the last seven training
/// rates (the base of the trend cap).
struct BlendInputs {
    Vector test_kappa_raw;   // 14, raw scale
    Vector trend;            // 14, logit scale
    Vector constant_dow;     // 14, logit scale
    double train_tail_median = 0.0;
};

/// Distance of one candidate: sum over defined test days of the squared gap
/// between the inverse-logit forecast rate and the observed raw rate.
double candidate_distance(const BlendInputs& in, const TuningCandidate& cand);

/// Probabilities proportional to 1 / max(distance, 1e-12). Non-finite
/// distances receive zero mass; throws when nothing keeps positive mass.
Vector inverse_distance_probs(const Vector& distances);

/// Inverse-CDF index draw from a normalized probability vector; zero-mass
/// entries are never selected.
Eigen::Index sample_posterior_index(const Vector& probs, rng::Stream& s);

/// Normalized inverse-distance posterior (floor 1e-12 on each distance).
/// Non-finite distances receive probability zero; throws when every
/// candidate is non-finite.
TuningPosterior normalize_distances(std::vector<TuningCandidate> candidates,
                                    const Vector& distances);

/// Evaluate the whole grid. Throws when more than 7 of the 14 test days
/// have no defined rate (such regions take the sparse path instead).
TuningPosterior fit_tuning_posterior(const BlendInputs& in,
                                     const std::vector<TuningCandidate>& grid);

/// Inverse-CDF draw from the discrete posterior.
const TuningCandidate& sample_tuning(const TuningPosterior& post, rng::Stream& s);

}  // namespace epicast::blend
