#include "epicast/blend.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "epicast/stats.hpp"

namespace epicast::blend {

namespace {
constexpr double kLambdaFloor = 1e-6;
constexpr double kDistanceFloor = 1e-12;
constexpr Eigen::Index kTestDays = 14;
}  // namespace

SplitWindows split_windows(Eigen::Index last) {
    if (last < 41) throw std::runtime_error("need 42 days of history to split train/test");
    SplitWindows w;
    w.train_begin = last - 41;
    w.train_end = last - 14;
    w.test_begin = last - 13;
    w.test_end = last;
    return w;
}

double transition_weight(int k, double omega) {
    if (k < 1) throw std::invalid_argument("horizon day must be >= 1");
    if (!(omega >= 1.0)) throw std::invalid_argument("omega must be >= 1");
    if (double(k) > omega + 1.0) return 0.0;
    const double r = double(k - 1) / omega;
    return 1.0 - r * r;
}

double damping(int k, double phi) {
    if (k < 0) throw std::invalid_argument("horizon day must be >= 0");
    if (!(phi > 0.0)) throw std::invalid_argument("phi must be > 0");
    return std::max(1.0 + double(k) * (phi - 1.0) / 30.0, kLambdaFloor);
}

double eta_cap(const Vector& train_logit_tail, double eta) {
    if (train_logit_tail.size() != 7) {
        throw std::invalid_argument("the trend cap uses exactly the last 7 training values");
    }
    std::vector<double> v(train_logit_tail.data(), train_logit_tail.data() + 7);
    return stats::median(std::move(v)) * eta;
}

double kappa_forecast(int k, double trend_k, double constant_dow_k,
                      const TuningCandidate& cand, double eta_star) {
    const double w = transition_weight(k, cand.omega);
    const double lambda = damping(k, cand.phi);
    double mix = 0.0;
    if (w > 0.0) mix += w * std::min(eta_star, trend_k);
    if (w < 1.0) mix += (1.0 - w) * constant_dow_k;
    return lambda * mix;
}

std::vector<TuningCandidate> make_grid(const std::vector<double>& etas,
                                       const std::vector<double>& omegas,
                                       const std::vector<double>& phis) {
    std::vector<TuningCandidate> grid;
    grid.reserve(etas.size() * omegas.size() * phis.size());
    for (double eta : etas) {
        if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta outside [0,1]");
        for (double omega : omegas) {
            if (!(omega >= 1.0)) throw std::invalid_argument("omega below 1");
            for (double phi : phis) {
                if (!(phi > 0.0)) throw std::invalid_argument("phi not positive");
                grid.push_back({eta, omega, phi});
            }
        }
    }
    if (grid.empty()) throw std::invalid_argument("empty tuning grid");
    return grid;
}

double candidate_distance(const BlendInputs& in, const TuningCandidate& cand) {
    if (in.test_kappa_raw.size() != kTestDays || in.trend.size() != kTestDays ||
        in.constant_dow.size() != kTestDays) {
        throw std::invalid_argument("blend inputs must cover the 14 held-out days");
    }
    const double eta_star = in.train_tail_median * cand.eta;
    double d = 0.0;
    for (Eigen::Index i = 0; i < kTestDays; ++i) {
        if (std::isnan(in.test_kappa_raw[i])) continue;  // undefined day
        const double f = kappa_forecast(int(i) + 1, in.trend[i], in.constant_dow[i], cand,
                                        eta_star);
        if (!std::isfinite(f)) return std::numeric_limits<double>::quiet_NaN();
        const double gap = stats::inverse_logit(f) - in.test_kappa_raw[i];
        d += gap * gap;
    }
    return d;
}

TuningPosterior normalize_distances(std::vector<TuningCandidate> candidates,
                                    const Vector& distances) {
    const Eigen::Index n = Eigen::Index(candidates.size());
    if (distances.size() != n || n == 0) {
        throw std::invalid_argument("candidate/distance length mismatch");
    }
    TuningPosterior post;
    post.candidates = std::move(candidates);
    post.distances = distances;
    post.probs = inverse_distance_probs(distances);
    return post;
}

Vector inverse_distance_probs(const Vector& distances) {
    Vector probs = Vector::Zero(distances.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < distances.size(); ++i) {
        if (!std::isfinite(distances[i])) continue;
        probs[i] = 1.0 / std::max(distances[i], kDistanceFloor);
        total += probs[i];
    }
    if (!(total > 0.0)) {
        throw std::runtime_error("every tuning candidate produced a non-finite forecast");
    }
    probs /= total;
    return probs;
}

Eigen::Index sample_posterior_index(const Vector& probs, rng::Stream& s) {
    if (probs.size() == 0) throw std::invalid_argument("empty posterior");
    const double u = rng::uniform01(s);
    double cum = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        cum += probs[i];
        if (u < cum) return i;
    }
    // Rounding pushed the cumulative a hair under 1: take the last live one.
    return last_positive;
}

TuningPosterior fit_tuning_posterior(const BlendInputs& in,
                                     const std::vector<TuningCandidate>& grid) {
    Eigen::Index undefined = 0;
    for (Eigen::Index i = 0; i < in.test_kappa_raw.size(); ++i) {
        if (std::isnan(in.test_kappa_raw[i])) ++undefined;
    }
    if (undefined > 7) {
        throw std::runtime_error("fewer than half the held-out days have a defined rate");
    }
    Vector d(Eigen::Index(grid.size()));
    for (std::size_t c = 0; c < grid.size(); ++c) {
        d[Eigen::Index(c)] = candidate_distance(in, grid[c]);
    }
    return normalize_distances(grid, d);
}

const TuningCandidate& sample_tuning(const TuningPosterior& post, rng::Stream& s) {
    if (post.candidates.empty()) throw std::invalid_argument("empty posterior");
    return post.candidates[std::size_t(sample_posterior_index(post.probs, s))];
}

}  // namespace epicast::blend
