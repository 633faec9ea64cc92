#pragma once

#include <optional>

#include "epicast/types.hpp"

namespace epicast::growth {

/// Daily growth of a cumulative series on the raw and clamped-logit scales.
/// Entries are aligned with the input days; positions with no defined rate
/// (day 0, and any day whose previous cumulative is zero) hold NaN.
struct GrowthSeries {
    Vector raw;                 // cum[t]/cum[t-1] - 1
    Vector logit;               // clamped logit of raw
    double tau = 0.0;           // clamp threshold
    Eigen::Index first_valid = -1;
};

/// Raw growth rates, NaN-aligned as described above. Evaluation starts the
/// day after the cumulative count first becomes positive.
Vector empirical_growth_rate(const CountVector& cum);

/// 0.95 times the smallest strictly positive (finite) entry; nullopt when
/// no such entry exists (the sparse regime). Throws when the result leaves
/// (0, 0.5), since the clamp interval [tau, 1-tau] would collapse.
std::optional<double> compute_tau(const Vector& raw);

/// logit of raw clamped into [tau, 1-tau]; NaN entries pass through.
double clamped_logit(double raw, double tau);
Vector clamped_logit(const Vector& raw, double tau);

/// Logit-scale growth rate that keeps daily incidence at `ybar` when pushed
/// through one step of the susceptible-depletion recursion anchored at
/// cumulative `cum_prev` with initial susceptibles `delta_s0`.
double kappa_constant(double ybar, double cum_prev, double delta_s0, double tau);

/// Mean of the seven values ending at `anchor` (inclusive).
double average_last_week(const CountVector& daily, Eigen::Index anchor);

/// Assemble raw + clamped-logit series with tau computed from the same
/// window; nullopt in the sparse regime (no positive growth anywhere).
std::optional<GrowthSeries> make_growth_series(const CountVector& cum);

}  // namespace epicast::growth
