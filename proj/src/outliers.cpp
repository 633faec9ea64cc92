#include "epicast/outliers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "epicast/stats.hpp"

namespace epicast::outliers {

namespace {

constexpr double kMadScale = 1.4826;  // normal-consistency factor for the MAD

Vector to_log1p(const CountVector& daily) {
    Vector y(daily.size());
    for (Eigen::Index i = 0; i < daily.size(); ++i) y[i] = std::log1p(double(daily[i]));
    return y;
}

/// Residuals from a centered 7-day moving average (window truncated at the
/// series boundaries).
Vector ma_residuals(const CountVector& daily) {
    const Eigen::Index n = daily.size();
    Vector r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - 3);
        const Eigen::Index hi = std::min(n - 1, i + 3);
        double sum = 0;
        for (Eigen::Index j = lo; j <= hi; ++j) sum += double(daily[j]);
        r[i] = double(daily[i]) - sum / double(hi - lo + 1);
    }
    return r;
}

std::vector<bool> hampel_votes(const CountVector& daily, const OutlierConfig& cfg) {
    const Eigen::Index n = daily.size();
    const Eigen::Index half = cfg.hampel_window / 2;
    std::vector<bool> flag(n, false);
    std::vector<double> window;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min(n - 1, i + half);
        window.clear();
        for (Eigen::Index j = lo; j <= hi; ++j) window.push_back(double(daily[j]));
        const double med = stats::median(window);
        for (double& w : window) w = std::abs(w - med);
        const double mad = stats::median(window);
        flag[i] = std::abs(double(daily[i]) - med) > cfg.hampel_k * kMadScale * mad;
    }
    return flag;
}

std::vector<bool> dow_z_votes(const CountVector& daily, int first_weekday,
                              const OutlierConfig& cfg) {
    const Eigen::Index n = daily.size();
    const Vector y = to_log1p(daily);
    std::vector<bool> flag(n, false);
    for (int w = 0; w < 7; ++w) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((first_weekday + i) % 7 == w) idx.push_back(i);
        }
        if (idx.size() < 2) continue;
        std::vector<double> vals;
        vals.reserve(idx.size());
        for (Eigen::Index i : idx) vals.push_back(y[i]);
        const double m = stats::mean(vals);
        const double sd = std::sqrt(stats::variance(vals));
        if (sd <= 0.0) continue;
        for (Eigen::Index i : idx) {
            if (std::abs(y[i] - m) / sd > cfg.dow_z_threshold) flag[i] = true;
        }
    }
    return flag;
}

std::vector<bool> iqr_votes(const Vector& resid, const OutlierConfig& cfg) {
    std::vector<double> vals(resid.data(), resid.data() + resid.size());
    std::sort(vals.begin(), vals.end());
    const double q1 = stats::quantile_sorted(vals, 0.25);
    const double q3 = stats::quantile_sorted(vals, 0.75);
    const double iqr = q3 - q1;
    const double lo = q1 - cfg.iqr_multiplier * iqr;
    const double hi = q3 + cfg.iqr_multiplier * iqr;
    std::vector<bool> flag(resid.size(), false);
    for (Eigen::Index i = 0; i < resid.size(); ++i) flag[i] = resid[i] < lo || resid[i] > hi;
    return flag;
}

/// Generalized ESD test on the residuals, run sequentially: each round
/// tests the most extreme remaining point and the procedure stops at the
/// first non-significant one. (The masking-robust largest-i variant would
/// progressively unmask recurring weekly dips that the weekday-aware
/// detectors deliberately tolerate, so it is too eager here.)
std::vector<bool> esd_votes(const Vector& resid, const OutlierConfig& cfg) {
    const Eigen::Index n = resid.size();
    std::vector<bool> flag(n, false);
    const int k_max = std::max<int>(1, int(cfg.esd_max_fraction * double(n)));

    std::vector<Eigen::Index> remaining(n);
    for (Eigen::Index i = 0; i < n; ++i) remaining[i] = i;
    for (int k = 1; k <= k_max; ++k) {
        const Eigen::Index m = Eigen::Index(remaining.size());
        if (m < 3) break;
        double sum = 0;
        for (Eigen::Index i : remaining) sum += resid[i];
        const double mean = sum / double(m);
        double ss = 0;
        for (Eigen::Index i : remaining) ss += (resid[i] - mean) * (resid[i] - mean);
        const double sd = std::sqrt(ss / double(m - 1));
        if (sd <= 0.0) break;

        std::size_t arg = 0;
        double best = -1;
        for (std::size_t j = 0; j < remaining.size(); ++j) {
            const double dev = std::abs(resid[remaining[j]] - mean);
            if (dev > best) {
                best = dev;
                arg = j;
            }
        }
        const double big_r = best / sd;

        const double df = double(m - 2);
        if (df < 1) break;
        const double p = 1.0 - cfg.esd_alpha / (2.0 * double(m));
        const double t = stats::student_t_quantile(p, df);
        const double lambda =
            double(m - 1) * t / std::sqrt((df + t * t) * double(m));
        if (big_r <= lambda) break;

        flag[remaining[arg]] = true;
        remaining.erase(remaining.begin() + long(arg));
    }
    return flag;
}

/// Internally studentized residuals from an intercept + trend + weekday fit
/// on log1p counts.
std::vector<bool> student_votes(const CountVector& daily, int first_weekday,
                                const OutlierConfig& cfg) {
    const Eigen::Index n = daily.size();
    std::vector<bool> flag(n, false);
    constexpr Eigen::Index p = 8;  // intercept, trend, six weekday offsets
    if (n <= p) return flag;

    const Vector y = to_log1p(daily);
    Matrix x = Matrix::Zero(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = double(i);
        const int w = int((first_weekday + i) % 7);
        if (w > 0) x(i, 1 + w) = 1.0;  // Sunday is the reference level
    }

    const Eigen::HouseholderQR<Matrix> qr(x);
    const Vector beta = qr.solve(y);
    const Vector resid = y - x * beta;
    const double s2 = resid.squaredNorm() / double(n - p);
    if (s2 <= 1e-20) return flag;

    const Matrix thin_q = qr.householderQ() * Matrix::Identity(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = std::min(thin_q.row(i).squaredNorm(), 1.0 - 1e-12);
        const double r = resid[i] / std::sqrt(s2 * (1.0 - h));
        if (std::abs(r) > cfg.student_threshold) flag[i] = true;
    }
    return flag;
}

}  // namespace

Eigen::VectorXi detect_outliers(const CountVector& daily, int first_weekday,
                                const OutlierConfig& cfg) {
    const Eigen::Index n = daily.size();
    if (n < 14) throw std::runtime_error("outlier detection needs at least 14 days of history");
    if (first_weekday < 0 || first_weekday > 6) {
        throw std::invalid_argument("first_weekday must be in 0..6");
    }

    const Vector resid = ma_residuals(daily);
    const std::vector<std::vector<bool>> verdicts{
        hampel_votes(daily, cfg),
        dow_z_votes(daily, first_weekday, cfg),
        iqr_votes(resid, cfg),
        esd_votes(resid, cfg),
        student_votes(daily, first_weekday, cfg),
    };

    Eigen::VectorXi votes = Eigen::VectorXi::Zero(n);
    for (const auto& v : verdicts) {
        for (Eigen::Index i = 0; i < n; ++i) votes[i] += v[std::size_t(i)] ? 1 : 0;
    }
    return votes;
}

OutlierReport adjust_outliers(const CountVector& daily, const Eigen::VectorXi& votes,
                              const OutlierConfig& cfg) {
    const Eigen::Index n = daily.size();
    if (votes.size() != n) throw std::invalid_argument("votes/series length mismatch");

    OutlierReport report;
    report.votes = votes;
    report.flags.assign(std::size_t(n), false);
    report.adjusted = daily;
    for (Eigen::Index i = 0; i < n; ++i) {
        report.flags[std::size_t(i)] = votes[i] >= cfg.vote_threshold;
    }

    const auto unflagged = [&](Eigen::Index j) { return !report.flags[std::size_t(j)]; };
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!report.flags[std::size_t(i)]) continue;

        // Same weekday, +/- a few weeks, skipping other flagged days.
        std::vector<double> stratum;
        for (int k = -cfg.replacement_week_span; k <= cfg.replacement_week_span; ++k) {
            const Eigen::Index j = i + 7 * k;
            if (j == i || j < 0 || j >= n) continue;
            if (unflagged(j)) stratum.push_back(double(daily[j]));
        }
        if (Eigen::Index(stratum.size()) < 3) {
            // Thin stratum: plain centered rolling median instead.
            const Eigen::Index half = cfg.replacement_fallback_window / 2;
            stratum.clear();
            for (Eigen::Index j = std::max<Eigen::Index>(0, i - half);
                 j <= std::min(n - 1, i + half); ++j) {
                if (j != i && unflagged(j)) stratum.push_back(double(daily[j]));
            }
        }
        if (stratum.empty()) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i && unflagged(j)) stratum.push_back(double(daily[j]));
            }
        }
        if (stratum.empty()) continue;  // nothing usable; keep the original

        const double replacement = stats::median(stratum);
        report.adjusted[i] = std::max<std::int64_t>(0, std::llround(replacement));
    }
    return report;
}

OutlierReport clean_series(const CountVector& daily, int first_weekday,
                           const OutlierConfig& cfg) {
    return adjust_outliers(daily, detect_outliers(daily, first_weekday, cfg), cfg);
}

}  // namespace epicast::outliers
