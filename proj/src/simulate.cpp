#include "epicast/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "epicast/regress.hpp"
#include "epicast/stats.hpp"

namespace epicast::simulate {
namespace {

constexpr double kAlphaMin = 1e-8;  // Poisson limit and search floor
constexpr double kAlphaMax = 1e4;
constexpr int kTailDays = 28;          // regime rule and refit window
constexpr int kDispersionDays = 42;    // overdispersion fitting window
constexpr int kAttackDrawLimit = 100;  // attack-rate resampling budget

// Regression inputs harvested from the defined (finite) rates in the day
// range [begin, end]: day numbers, weekdays, and logit-scale responses.
struct FitPoints {
    std::vector<long> t;
    std::vector<int> dow;
    Vector y;
};

FitPoints gather_points(const growth::GrowthSeries& rates, const RegionSeries& series,
                        Eigen::Index begin, Eigen::Index end) {
    FitPoints pts;
    std::vector<double> y;
    for (Eigen::Index i = std::max<Eigen::Index>(begin, 0); i <= end; ++i) {
        if (!std::isfinite(rates.logit[i])) continue;
        pts.t.push_back(static_cast<long>(i));
        pts.dow.push_back(weekday_of(series.day_at(i)));
        y.push_back(rates.logit[i]);
    }
    pts.y.resize(static_cast<Eigen::Index>(y.size()));
    std::copy(y.begin(), y.end(), pts.y.data());
    return pts;
}

// Trend predictions (with any selected weekday offsets) for `count` days
// starting at day index `begin`.
Vector trend_path(const regress::RegressionFit& fit, const RegionSeries& series,
                  Eigen::Index begin, Eigen::Index count) {
    Vector path(count);
    for (Eigen::Index j = 0; j < count; ++j)
        path[j] = regress::predict(fit, static_cast<double>(begin + j),
                                   weekday_of(series.day_at(begin + j)));
    return path;
}

// Constant-incidence rate path over the held-out window, anchored to the
// observed cumulative of the previous day.
Vector constant_path_observed(const RegionSeries& series, double ybar, double s0_nominal,
                              double tau, Eigen::Index test_begin, Eigen::Index count) {
    Vector path(count);
    for (Eigen::Index j = 0; j < count; ++j) {
        const double cum_prev = static_cast<double>(series.cum_cases[test_begin + j - 1]);
        path[j] = growth::kappa_constant(ybar, cum_prev, s0_nominal, tau);
    }
    return path;
}

// Constant-incidence rate path beyond the observed data. Under the
// constant-cases hypothesis the cumulative advances by ybar per day, so the
// previous-day cumulative for horizon day k is cum_anchor + (k-1) * ybar.
Vector constant_path_projected(double cum_anchor, double ybar, double s0_nominal,
                               double tau, Eigen::Index count) {
    Vector path(count);
    for (Eigen::Index k = 1; k <= count; ++k) {
        const double cum_prev = cum_anchor + static_cast<double>(k - 1) * ybar;
        path[k - 1] = growth::kappa_constant(ybar, cum_prev, s0_nominal, tau);
    }
    return path;
}

void add_dow_offsets(Vector& path, const regress::RegressionFit& fit,
                     const RegionSeries& series, Eigen::Index begin) {
    const auto offsets = regress::dow_offsets(fit);
    for (Eigen::Index j = 0; j < path.size(); ++j)
        path[j] += offsets[static_cast<std::size_t>(weekday_of(series.day_at(begin + j)))];
}

// Centered 7-day moving average (window truncated at the edges), floored at
// 0.5 so every mean entering the dispersion fit stays positive.
Vector dispersion_means(const CountVector& window) {
    const Eigen::Index n = window.size();
    Vector means(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - 3);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + 3);
        double sum = 0.0;
        for (Eigen::Index j = lo; j <= hi; ++j) sum += static_cast<double>(window[j]);
        means[i] = std::max(sum / static_cast<double>(hi - lo + 1), 0.5);
    }
    return means;
}

// Everything a full-regime sampling pass needs, assembled once per region.
struct FullModel {
    blend::TuningPosterior posterior;
    Vector trend;         // logit-scale trend for horizon days 1..K
    Vector constant_dow;  // logit-scale constant+DOW for horizon days 1..K
    Vector tail7;         // last seven defined rates (the trend-cap base)
    DispersionEstimate dispersion;
    double cum_anchor = 0.0;  // observed cumulative on the last day
};

// Build the posterior and the forecast-day component paths. Returns nullopt
// when the rate history cannot support them (the sparse fallback).
std::optional<FullModel> build_full_model(const RegionSeries& series,
                                          const growth::GrowthSeries& rates,
                                          const EngineConfig& config) {
    const Eigen::Index n = series.size();
    if (n < 42) return std::nullopt;

    const auto split = blend::split_windows(n - 1);
    const auto train = gather_points(rates, series, split.train_begin, split.train_end);
    if (train.y.size() < 10) return std::nullopt;
    if (series.cum_cases[split.train_end] <= 0) return std::nullopt;

    const double s0_nominal =
        config.attack_rate_nominal * static_cast<double>(series.population);

    // Posterior over the tuning grid, scored on the held-out 14 days.
    const auto train_fit = regress::fit_dow_trend(train.t, train.dow, train.y);
    const Eigen::Index test_len = split.test_end - split.test_begin + 1;
    const double ybar_train = growth::average_last_week(series.daily_cases, split.train_end);

    blend::BlendInputs inputs;
    inputs.trend = trend_path(train_fit, series, split.test_begin, test_len);
    inputs.constant_dow = constant_path_observed(series, ybar_train, s0_nominal, rates.tau,
                                                 split.test_begin, test_len);
    add_dow_offsets(inputs.constant_dow, train_fit, series, split.test_begin);
    inputs.test_kappa_raw = rates.raw.segment(split.test_begin, test_len);
    {
        const Vector tail = rates.logit.segment(split.train_end - 6, 7);
        if (!tail.allFinite()) return std::nullopt;
        inputs.train_tail_median =
            stats::median(std::vector<double>(tail.data(), tail.data() + tail.size()));
    }

    FullModel model;
    model.posterior = blend::fit_tuning_posterior(
        inputs, blend::make_grid(config.eta_grid, config.omega_grid, config.phi_grid));

    // Refit on the trailing 28 days and extend both components over the
    // horizon; beyond the data the constant path uses the projected
    // cumulative.
    const auto recent = gather_points(rates, series, n - kTailDays, n - 1);
    if (recent.y.size() < 10) return std::nullopt;
    const auto refit = regress::fit_dow_trend(recent.t, recent.dow, recent.y);

    model.cum_anchor = static_cast<double>(series.cum_cases[n - 1]);
    const double ybar = growth::average_last_week(series.daily_cases, n - 1);
    model.trend = trend_path(refit, series, n, config.horizon);
    model.constant_dow = constant_path_projected(model.cum_anchor, ybar, s0_nominal,
                                                 rates.tau, config.horizon);
    add_dow_offsets(model.constant_dow, refit, series, n);

    model.tail7 = rates.logit.segment(n - 7, 7);
    if (!model.tail7.allFinite()) return std::nullopt;

    model.dispersion = estimate_dispersion(series.daily_cases.tail(kDispersionDays),
                                           dispersion_means(series.daily_cases.tail(kDispersionDays)));
    return model;
}

}  // namespace

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::full: return "full";
        case Regime::sparse_empirical: return "sparse-empirical";
        case Regime::sparse_bernoulli: return "sparse-bernoulli";
    }
    return "unknown";
}

Regime classify_regime(const CountVector& tail28) {
    if (tail28.size() != kTailDays)
        throw std::invalid_argument("regime rule needs exactly 28 trailing days");
    const Eigen::Index zeros = (tail28.array() == 0).count();
    if (zeros == kTailDays) return Regime::sparse_bernoulli;
    if (zeros > kTailDays / 2) return Regime::sparse_empirical;
    return Regime::full;
}

CountVector sample_sparse(Regime regime, const CountVector& tail28,
                          rng::Stream& stream, Eigen::Index horizon) {
    if (regime == Regime::full)
        throw std::invalid_argument("sample_sparse handles only the sparse regimes");
    if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
    CountVector path(horizon);
    if (regime == Regime::sparse_bernoulli) {
        for (Eigen::Index k = 0; k < horizon; ++k)
            path[k] = rng::bernoulli(stream, 1.0 / 29.0) ? 1 : 0;
        return path;
    }
    if (tail28.size() != kTailDays)
        throw std::invalid_argument("empirical resampling needs exactly 28 trailing days");
    for (Eigen::Index k = 0; k < horizon; ++k)
        path[k] = tail28[static_cast<Eigen::Index>(
            rng::uniform_index(stream, kTailDays))];
    return path;
}

double si_step(SimulationState& state, double rate) {
    if (!(state.s0 > 0.0))
        throw std::invalid_argument("susceptible pool must start positive");
    double fresh = rate * (state.susceptible / state.s0) * state.cum_cases;
    fresh = std::clamp(fresh, 0.0, state.susceptible);
    state.cum_cases += fresh;
    state.susceptible -= fresh;
    return fresh;
}

double nb_loglik(const CountVector& observed, const Vector& means, double alpha) {
    if (observed.size() != means.size())
        throw std::invalid_argument("counts and means must have equal length");
    if (observed.size() == 0) throw std::invalid_argument("empty likelihood window");
    double total = 0.0;
    for (Eigen::Index i = 0; i < observed.size(); ++i) {
        const double m = means[i];
        if (!(m > 0.0)) throw std::invalid_argument("likelihood means must be positive");
        const double y = static_cast<double>(observed[i]);
        if (alpha <= kAlphaMin) {
            total += y * std::log(m) - m - std::lgamma(y + 1.0);
            continue;
        }
        // Mean m with size r = m / alpha: success odds depend only on alpha.
        const double r = m / alpha;
        total += std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0)
                 - r * std::log1p(alpha);
        if (y > 0.0) total += y * (std::log(alpha) - std::log1p(alpha));
    }
    return total;
}

DispersionEstimate estimate_dispersion(const CountVector& observed, const Vector& means) {
    if (observed.size() != means.size())
        throw std::invalid_argument("counts and means must have equal length");
    if (observed.size() < 8)
        throw std::invalid_argument("dispersion fit needs at least 8 points");
    for (Eigen::Index i = 0; i < means.size(); ++i)
        if (!(means[i] > 0.0))
            throw std::invalid_argument("dispersion fit means must be positive");

    DispersionEstimate est;
    est.points = observed.size();

    bool exact = true;
    for (Eigen::Index i = 0; i < observed.size() && exact; ++i)
        exact = static_cast<double>(observed[i]) == means[i];
    if (exact) {  // zero residual everywhere: the Poisson limit is the MLE
        est.alpha_hat = kAlphaMin;
        est.loglik = nb_loglik(observed, means, kAlphaMin);
        return est;
    }

    const double shrink = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = kAlphaMin, b = kAlphaMax;
    double c = b - shrink * (b - a);
    double d = a + shrink * (b - a);
    double fc = nb_loglik(observed, means, c);
    double fd = nb_loglik(observed, means, d);
    while (b - a > kAlphaMin) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - shrink * (b - a);
            fc = nb_loglik(observed, means, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + shrink * (b - a);
            fd = nb_loglik(observed, means, d);
        }
    }
    double alpha = 0.5 * (a + b);
    if (alpha < 2.0 * kAlphaMin) alpha = kAlphaMin;  // report the floor exactly
    est.alpha_hat = alpha;
    est.loglik = nb_loglik(observed, means, alpha);
    return est;
}

std::int64_t nb_sample(double mean, double alpha, rng::Stream& stream) {
    if (!(mean > 0.0)) return 0;  // a zero-mean day stays zero
    if (alpha <= kAlphaMin) return rng::poisson_draw(stream, mean);
    const double rate = rng::gamma_draw(stream, mean / alpha, alpha);
    if (!(rate > 0.0)) return 0;
    return rng::poisson_draw(stream, rate);
}

CaseForecast forecast_cases(const RegionSeries& series, const EngineConfig& config,
                            std::uint64_t seed) {
    const Eigen::Index n = series.size();
    if (n < kTailDays)
        throw std::runtime_error(series.region_id +
                                 ": needs at least 28 days of history to forecast");
    const Eigen::Index samples = config.samples;
    const Eigen::Index horizon = config.horizon;

    CaseForecast out;
    out.ensemble.kind = SeriesKind::cases;
    out.ensemble.first_target_day = series.last_day() + 1;
    out.ensemble.seed = seed;
    out.ensemble.samples.resize(samples, horizon);

    const CountVector tail = series.daily_cases.tail(kTailDays);
    out.regime = classify_regime(tail);

    std::optional<FullModel> model;
    if (out.regime == Regime::full) {
        out.rates = growth::make_growth_series(series.cum_cases);
        if (out.rates) {
            model = build_full_model(series, *out.rates, config);
            if (model) out.split = blend::split_windows(n - 1);
        }
        if (!model) out.regime = Regime::sparse_empirical;  // thin rate history
    }

    if (!model) {
        for (Eigen::Index s = 0; s < samples; ++s) {
            rng::Stream stream(rng::derive_stream(seed, series.region_id, 0,
                                                  static_cast<std::uint64_t>(s)));
            out.ensemble.samples.row(s) =
                sample_sparse(out.regime, tail, stream, horizon).transpose();
        }
        return out;
    }

    out.posterior = model->posterior;
    out.dispersion = model->dispersion;
    out.expected.resize(samples, horizon);
    out.attack_rates.resize(samples);

    const double population = static_cast<double>(series.population);
    for (Eigen::Index s = 0; s < samples; ++s) {
        rng::Stream stream(rng::derive_stream(seed, series.region_id, 0,
                                              static_cast<std::uint64_t>(s)));
        // Draw order per sample is fixed: tuning triple, attack rate(s),
        // then one count per horizon day.
        const auto& cand = blend::sample_tuning(*out.posterior, stream);
        const double eta_star = blend::eta_cap(model->tail7, cand.eta);

        double s0 = 0.0;
        bool viable = false;
        for (int attempt = 0; attempt < kAttackDrawLimit && !viable; ++attempt) {
            const double p = rng::uniform(stream, config.attack_rate_min,
                                          config.attack_rate_max);
            s0 = p * population;
            if (s0 > model->cum_anchor) {
                out.attack_rates[s] = p;
                viable = true;
            }
        }
        if (!viable)
            throw std::runtime_error(series.region_id +
                                     ": cumulative cases exceed every drawn attack-rate ceiling");

        SimulationState state{model->cum_anchor, s0 - model->cum_anchor, s0};
        for (Eigen::Index k = 1; k <= horizon; ++k) {
            const double kf = blend::kappa_forecast(static_cast<int>(k), model->trend[k - 1],
                                                    model->constant_dow[k - 1], cand, eta_star);
            const double fresh = si_step(state, stats::inverse_logit(kf));
            out.expected(s, k - 1) = fresh;
            out.ensemble.samples(s, k - 1) =
                nb_sample(fresh, model->dispersion.alpha_hat, stream);
        }
    }
    return out;
}

}  // namespace epicast::simulate
