#include "epicast/deaths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "epicast/blend.hpp"
#include "epicast/dates.hpp"
#include "epicast/regress.hpp"
#include "epicast/stats.hpp"

namespace epicast::deaths {
namespace {

// Clamp threshold when every observed ratio is zero: ties the floor to the
// same 1-in-29 prior the all-zero sampling branch uses.
constexpr double kZeroDeathTau = 0.95 / 29.0;
constexpr Eigen::Index kTailDays = 28;
constexpr Eigen::Index kMinFitPoints = 10;
constexpr Eigen::Index kMaxUndefinedTest = 7;

struct FitPoints {
    std::vector<long> t;
    std::vector<int> dow;
    Vector y;
};

// Finite logit-scale ratios in [begin, end], tagged with day index and weekday.
FitPoints gather_points(const RegionSeries& series, const Vector& logit, Eigen::Index begin,
                        Eigen::Index end) {
    FitPoints pts;
    std::vector<double> y;
    for (Eigen::Index i = begin; i <= end; ++i) {
        if (!std::isfinite(logit[i])) continue;
        pts.t.push_back(static_cast<long>(i));
        pts.dow.push_back(weekday_of(series.day_at(i)));
        y.push_back(logit[i]);
    }
    pts.y.resize(static_cast<Eigen::Index>(y.size()));
    std::copy(y.begin(), y.end(), pts.y.data());
    return pts;
}

Vector trend_path(const RegionSeries& series, const regress::RegressionFit& fit,
                  Eigen::Index begin, Eigen::Index count) {
    Vector out(count);
    for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index i = begin + j;
        out[j] = regress::predict(fit, static_cast<long>(i), weekday_of(series.day_at(i)));
    }
    return out;
}

// Held-out squared error of the clamped trend against the raw ratios over the
// test window; NaN poisons the candidate when the trend is non-finite.
double candidate_distance(const growth::GrowthSeries& rates, const Vector& trend,
                          Eigen::Index test_begin, const DeathTuningCandidate& cand) {
    double d = 0.0;
    for (Eigen::Index j = 0; j < trend.size(); ++j) {
        const double raw = rates.raw[test_begin + j];
        if (!std::isfinite(raw)) continue;
        const double g = gamma_forecast(trend[j], cand);
        if (!std::isfinite(g)) return std::numeric_limits<double>::quiet_NaN();
        const double diff = stats::inverse_logit(g) - raw;
        d += diff * diff;
    }
    return d;
}

}  // namespace

double moving_average(const Vector& series, int nu, Eigen::Index t) {
    if (nu < 1) throw std::invalid_argument("moving-average window must be positive");
    if (t >= series.size()) throw std::invalid_argument("moving-average index out of range");
    if (t < static_cast<Eigen::Index>(nu) - 1) {
        throw std::invalid_argument("insufficient history for moving average");
    }
    return series.segment(t - nu + 1, nu).mean();
}

std::optional<growth::GrowthSeries> cfr_series(const CountVector& daily_deaths,
                                               const CountVector& daily_cases, int nu) {
    if (daily_deaths.size() != daily_cases.size()) {
        throw std::invalid_argument("deaths and cases must cover the same days");
    }
    if (nu < 1) throw std::invalid_argument("moving-average window must be positive");

    const Eigen::Index n = daily_deaths.size();
    const Vector cases = daily_cases.cast<double>();

    growth::GrowthSeries out;
    out.raw = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index t = static_cast<Eigen::Index>(nu) - 1; t < n; ++t) {
        const double ma = moving_average(cases, nu, t);
        if (ma > 0.0) out.raw[t] = static_cast<double>(daily_deaths[t]) / ma;
    }

    out.first_valid = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (std::isfinite(out.raw[t])) {
            out.first_valid = t;
            break;
        }
    }
    if (out.first_valid < 0) return std::nullopt;

    out.tau = growth::compute_tau(out.raw).value_or(kZeroDeathTau);
    out.logit = growth::clamped_logit(out.raw, out.tau);
    return out;
}

double gamma_forecast(double trend_t, const DeathTuningCandidate& cand) {
    if (!(cand.theta_lower <= cand.theta_upper)) {
        throw std::invalid_argument("fatality-ratio clamp interval is inverted");
    }
    return std::clamp(trend_t, cand.theta_lower, cand.theta_upper);
}

double spliced_case_ma(const CountVector& observed_daily, const CountVector& forecast_path,
                       int k, int nu) {
    if (k < 1) throw std::invalid_argument("horizon day must be positive");
    if (nu < 1) throw std::invalid_argument("moving-average window must be positive");

    const Eigen::Index n = observed_daily.size();
    const long end_rel = std::max(0, k - nu);  // window end, in days after the last observed day
    const long begin_rel = end_rel - nu + 1;
    if (n - 1 + begin_rel < 0) {
        throw std::invalid_argument("insufficient case history for the spliced moving average");
    }
    if (end_rel > forecast_path.size()) {
        throw std::invalid_argument("forecast path too short for the spliced moving average");
    }

    double sum = 0.0;
    for (long d = begin_rel; d <= end_rel; ++d) {
        sum += d <= 0 ? static_cast<double>(observed_daily[n - 1 + d])
                      : static_cast<double>(forecast_path[d - 1]);
    }
    return sum / static_cast<double>(nu);
}

std::optional<DeathTuningPosterior> fit_death_tuning(const RegionSeries& series,
                                                     const EngineConfig& config) {
    const Eigen::Index n = series.size();
    if (n < 42) return std::nullopt;
    const auto split = blend::split_windows(n - 1);

    std::vector<DeathTuningCandidate> candidates;
    std::vector<double> distances;

    for (int nu : config.cfr_window_grid) {
        const auto rates = cfr_series(series.daily_deaths, series.daily_cases, nu);
        if (!rates) continue;

        const auto train = gather_points(series, rates->logit, split.train_begin, split.train_end);
        if (static_cast<Eigen::Index>(train.t.size()) < kMinFitPoints) continue;

        Eigen::Index undefined = 0;
        for (Eigen::Index i = split.test_begin; i <= split.test_end; ++i) {
            if (!std::isfinite(rates->raw[i])) ++undefined;
        }
        if (undefined > kMaxUndefinedTest) continue;

        const auto fit = regress::fit_dow_trend(train.t, train.dow, train.y);
        const Vector trend =
            trend_path(series, fit, split.test_begin, split.test_end - split.test_begin + 1);

        std::vector<double> train_logit(train.y.data(), train.y.data() + train.y.size());
        std::sort(train_logit.begin(), train_logit.end());

        for (double ql : config.cfr_floor_quantiles) {
            for (double qu : config.cfr_ceiling_quantiles) {
                DeathTuningCandidate cand;
                cand.nu = nu;
                cand.theta_lower = stats::quantile_sorted(train_logit, ql);
                cand.theta_upper = stats::quantile_sorted(train_logit, qu);
                if (cand.theta_lower > cand.theta_upper) continue;
                if (cand.theta_lower == cand.theta_upper) {
                    cand.theta_lower -= 0.5;
                    cand.theta_upper += 0.5;
                }
                const bool dup = std::any_of(candidates.begin(), candidates.end(),
                                             [&](const DeathTuningCandidate& c) {
                                                 return c.nu == cand.nu &&
                                                        c.theta_lower == cand.theta_lower &&
                                                        c.theta_upper == cand.theta_upper;
                                             });
                if (dup) continue;
                candidates.push_back(cand);
                distances.push_back(candidate_distance(*rates, trend, split.test_begin, cand));
            }
        }
    }

    if (candidates.empty()) return std::nullopt;

    DeathTuningPosterior post;
    post.candidates = std::move(candidates);
    post.distances.resize(static_cast<Eigen::Index>(distances.size()));
    std::copy(distances.begin(), distances.end(), post.distances.data());
    post.probs = blend::inverse_distance_probs(post.distances);
    return post;
}

DeathForecast forecast_deaths(const RegionSeries& series, const simulate::CaseForecast& cases,
                              const EngineConfig& config, std::uint64_t seed) {
    const Eigen::Index n = series.size();
    if (n < kTailDays) {
        throw std::runtime_error("region needs at least 28 days of history to forecast");
    }

    const Eigen::Index horizon = config.horizon;
    const Eigen::Index samples = config.samples;

    DeathForecast out;
    out.ensemble.kind = SeriesKind::deaths;
    out.ensemble.first_target_day = series.last_day() + 1;
    out.ensemble.seed = seed;
    out.ensemble.samples.resize(samples, horizon);

    const CountVector tail = series.daily_deaths.tail(kTailDays);
    out.regime = simulate::classify_regime(tail);

    if (out.regime == simulate::Regime::full) {
        out.posterior = fit_death_tuning(series, config);
        if (!out.posterior) out.regime = simulate::Regime::sparse_empirical;
    }

    // Refit each surviving window size's ratio trend on the last 28 days;
    // window sizes that can no longer support a fit lose their mass.
    std::map<int, Vector> trends;
    if (out.regime == simulate::Regime::full) {
        std::set<int> nus;
        for (const auto& cand : out.posterior->candidates) nus.insert(cand.nu);
        for (int nu : nus) {
            bool ok = false;
            if (const auto rates = cfr_series(series.daily_deaths, series.daily_cases, nu)) {
                const auto pts = gather_points(series, rates->logit, n - kTailDays, n - 1);
                if (static_cast<Eigen::Index>(pts.t.size()) >= kMinFitPoints) {
                    const auto fit = regress::fit_dow_trend(pts.t, pts.dow, pts.y);
                    trends[nu] = trend_path(series, fit, n, horizon);
                    ok = true;
                }
            }
            if (!ok) {
                for (Eigen::Index i = 0; i < out.posterior->probs.size(); ++i) {
                    if (out.posterior->candidates[std::size_t(i)].nu == nu) {
                        out.posterior->probs[i] = 0.0;
                    }
                }
            }
        }
        const double mass = out.posterior->probs.sum();
        if (mass > 0.0) {
            out.posterior->probs /= mass;
        } else {
            out.regime = simulate::Regime::sparse_empirical;
        }
    }

    if (out.regime != simulate::Regime::full) {
        for (Eigen::Index s = 0; s < samples; ++s) {
            rng::Stream stream(rng::derive_stream(seed, series.region_id, 1, static_cast<std::uint64_t>(s)));
            out.ensemble.samples.row(s) =
                simulate::sample_sparse(out.regime, tail, stream, horizon).transpose();
        }
        return out;
    }

    if (cases.ensemble.sample_count() != samples || cases.ensemble.horizon() != horizon) {
        throw std::invalid_argument(
            "case ensemble shape does not match the configured samples and horizon");
    }

    for (Eigen::Index s = 0; s < samples; ++s) {
        rng::Stream stream(rng::derive_stream(seed, series.region_id, 1, static_cast<std::uint64_t>(s)));
        const Eigen::Index idx = blend::sample_posterior_index(out.posterior->probs, stream);
        const DeathTuningCandidate& cand = out.posterior->candidates[std::size_t(idx)];
        const Vector& trend = trends.at(cand.nu);
        const CountVector path = cases.ensemble.samples.row(s).transpose();
        for (Eigen::Index k = 1; k <= horizon; ++k) {
            const double rate = stats::inverse_logit(gamma_forecast(trend[k - 1], cand));
            const double ma = spliced_case_ma(series.daily_cases, path, static_cast<int>(k), cand.nu);
            out.ensemble.samples(s, k - 1) = std::llround(rate * ma);
        }
    }
    return out;
}

}  // namespace epicast::deaths
