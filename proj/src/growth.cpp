#include "epicast/growth.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "epicast/stats.hpp"

namespace epicast::growth {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Vector empirical_growth_rate(const CountVector& cum) {
    const Eigen::Index n = cum.size();
    Vector raw = Vector::Constant(n, kNaN);
    for (Eigen::Index t = 1; t < n; ++t) {
        if (cum[t - 1] > 0) raw[t] = double(cum[t]) / double(cum[t - 1]) - 1.0;
    }
    return raw;
}

std::optional<double> compute_tau(const Vector& raw) {
    double min_pos = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        if (std::isfinite(raw[i]) && raw[i] > 0.0 && raw[i] < min_pos) min_pos = raw[i];
    }
    if (!std::isfinite(min_pos)) return std::nullopt;
    const double tau = 0.95 * min_pos;
    if (!(tau > 0.0 && tau < 0.5)) {
        throw std::runtime_error("growth clamp threshold " + std::to_string(tau) +
                                 " leaves (0, 0.5); series grows too explosively to fit");
    }
    return tau;
}

double clamped_logit(double raw, double tau) {
    if (std::isnan(raw)) return kNaN;
    const double clamped = std::min(std::max(raw, tau), 1.0 - tau);
    return stats::logit(clamped);
}

Vector clamped_logit(const Vector& raw, double tau) {
    if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("tau must lie in (0, 0.5)");
    Vector out(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) out[i] = clamped_logit(raw[i], tau);
    return out;
}

double kappa_constant(double ybar, double cum_prev, double delta_s0, double tau) {
    if (!(cum_prev > 0.0)) throw std::invalid_argument("cumulative count must be positive");
    if (cum_prev >= delta_s0) {
        throw std::runtime_error("cumulative count has exhausted the assumed attack rate");
    }
    if (ybar < 0.0) throw std::invalid_argument("mean incidence must be non-negative");
    const double depletion = (delta_s0 - cum_prev) / delta_s0;
    return clamped_logit(ybar / (depletion * cum_prev), tau);
}

double average_last_week(const CountVector& daily, Eigen::Index anchor) {
    if (anchor < 6 || anchor >= daily.size()) {
        throw std::invalid_argument("need seven days of history at the anchor");
    }
    double sum = 0;
    for (Eigen::Index i = anchor - 6; i <= anchor; ++i) sum += double(daily[i]);
    return sum / 7.0;
}

std::optional<GrowthSeries> make_growth_series(const CountVector& cum) {
    GrowthSeries gs;
    gs.raw = empirical_growth_rate(cum);
    const auto tau = compute_tau(gs.raw);
    if (!tau) return std::nullopt;
    gs.tau = *tau;
    gs.logit = clamped_logit(gs.raw, gs.tau);
    for (Eigen::Index i = 0; i < gs.raw.size(); ++i) {
        if (!std::isnan(gs.raw[i])) {
            gs.first_valid = i;
            break;
        }
    }
    return gs;
}

}  // namespace epicast::growth
