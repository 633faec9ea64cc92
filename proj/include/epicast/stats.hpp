#pragma once

#include <Eigen/Core>
#include <vector>

namespace epicast::stats {

using Vector = Eigen::VectorXd;

double mean(const std::vector<double>& v);

/// Sample variance (n-1 denominator); 0 for fewer than 2 values.
double variance(const std::vector<double>& v);

/// Median of the values; throws on empty input.
double median(std::vector<double> v);

/// Median absolute deviation about the median (no consistency factor).
double mad(std::vector<double> v);

/// Type-7 quantile (h = (n-1)q with linear interpolation) of a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Convenience: sorts a copy, then type-7 quantile.
double quantile(std::vector<double> v, double q);

double logit(double p);
double inverse_logit(double x);

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);

/// Inverse CDF of Student's t; p in (0, 1), df > 0.
double student_t_quantile(double p, double df);

}  // namespace epicast::stats
