#include "epicast/regress.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "epicast/stats.hpp"

namespace epicast::regress {

namespace {

constexpr Eigen::Index kParams = 8;

/// Columns: intercept, centered trend, Monday..Saturday indicators —
/// restricted to the requested blocks.
Matrix build_design(const std::vector<long>& t, const std::vector<int>& dow, double t0,
                    bool with_trend, bool with_dow) {
    const Eigen::Index n = Eigen::Index(t.size());
    const Eigen::Index p = 1 + (with_trend ? 1 : 0) + (with_dow ? 6 : 0);
    Matrix x = Matrix::Zero(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index c = 0;
        x(i, c++) = 1.0;
        if (with_trend) x(i, c++) = double(t[std::size_t(i)]) - t0;
        if (with_dow) {
            const int w = dow[std::size_t(i)];
            if (w > 0) x(i, c + w - 1) = 1.0;
        }
    }
    return x;
}

struct WlsResult {
    Vector beta;
    double rss = 0.0;  // weighted residual sum of squares
    bool full_rank = true;
};

WlsResult weighted_fit(const Matrix& x, const Vector& y, const Vector& w) {
    const Eigen::Index n = x.rows();
    Matrix xs = x;
    Vector ys = y;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = std::sqrt(w[i]);
        xs.row(i) *= s;
        ys[i] *= s;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(xs);
    WlsResult out;
    out.full_rank = qr.rank() == x.cols();
    out.beta = qr.solve(ys);
    out.rss = (ys - xs * out.beta).squaredNorm();
    return out;
}

double aic(double rss, Eigen::Index n, Eigen::Index p) {
    const double mean_rss = std::max(rss / double(n), 1e-24);
    return double(n) * std::log(mean_rss) + 2.0 * double(p + 1);
}

}  // namespace

Vector cooks_distance(const Matrix& design, const Vector& y) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (n <= p) throw std::invalid_argument("need more observations than parameters");

    const Eigen::HouseholderQR<Matrix> qr(design);
    const Vector beta = qr.solve(y);
    const Vector resid = y - design * beta;
    const double s2 = resid.squaredNorm() / double(n - p);
    Vector d = Vector::Zero(n);
    if (s2 <= 1e-24) return d;  // a perfect fit has no influential points

    const Matrix thin_q = qr.householderQ() * Matrix::Identity(n, p);
    std::vector<Eigen::Index> exact_leverage;
    double max_finite = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = thin_q.row(i).squaredNorm();
        if (h >= 1.0 - 1e-12) {
            exact_leverage.push_back(i);
            continue;
        }
        d[i] = (resid[i] * resid[i] / (double(p) * s2)) * (h / ((1.0 - h) * (1.0 - h)));
        max_finite = std::max(max_finite, d[i]);
    }
    for (Eigen::Index i : exact_leverage) d[i] = max_finite;
    return d;
}

RegressionFit fit_dow_trend(const std::vector<long>& t, const std::vector<int>& dow,
                            const Vector& y) {
    const Eigen::Index n = Eigen::Index(t.size());
    if (n < 10) throw std::invalid_argument("regression needs at least 10 points");
    if (dow.size() != std::size_t(n) || y.size() != n) {
        throw std::invalid_argument("regression input lengths differ");
    }
    if (std::set<long>(t.begin(), t.end()).size() < 2) {
        throw std::invalid_argument("regression needs at least 2 distinct days");
    }
    for (int w : dow) {
        if (w < 0 || w > 6) throw std::invalid_argument("weekday outside 0..6");
    }

    RegressionFit fit;
    fit.t0 = double(*std::max_element(t.begin(), t.end()));

    // Stage a: unweighted full fit measures each point's influence.
    const Matrix full = build_design(t, dow, fit.t0, true, true);
    Vector d;
    if (n > kParams && Eigen::ColPivHouseholderQR<Matrix>(full).rank() == kParams) {
        d = cooks_distance(full, y);
    } else {
        d = Vector::Zero(n);  // saturated or deficient: skip downweighting
    }

    // Stage b: inverse-distance weights, floored and normalized to mean 1.
    std::vector<double> dv(d.data(), d.data() + n);
    const double eps = stats::median(dv) / 100.0;
    fit.weights = Vector::Ones(n);
    if (eps > 0.0) {
        for (Eigen::Index i = 0; i < n; ++i) fit.weights[i] = 1.0 / std::max(d[i], eps);
        fit.weights *= double(n) / fit.weights.sum();
    }

    // Stage c: AIC over the four nested designs; ties go to fewer terms.
    struct Candidate {
        bool trend, dowb;
    };
    const Candidate candidates[] = {{false, false}, {true, false}, {false, true}, {true, true}};
    double best_aic = 0.0;
    bool have_best = false;
    for (const Candidate& c : candidates) {
        const Matrix x = build_design(t, dow, fit.t0, c.trend, c.dowb);
        if (n <= x.cols()) continue;
        const WlsResult r = weighted_fit(x, y, fit.weights);
        if (!r.full_rank) continue;
        const double score = aic(r.rss, n, x.cols());
        if (!have_best || score < best_aic - 1e-12) {
            best_aic = score;
            have_best = true;
            fit.has_trend = c.trend;
            fit.has_dow = c.dowb;
            fit.beta = Vector::Zero(kParams);
            Eigen::Index src = 0;
            fit.beta[0] = r.beta[src++];
            if (c.trend) fit.beta[1] = r.beta[src++];
            if (c.dowb) {
                for (int w = 1; w <= 6; ++w) fit.beta[1 + w] = r.beta[src++];
            }
        }
    }
    if (!have_best) {
        // Even the intercept fit failed: fall back to the weighted mean.
        fit.has_trend = fit.has_dow = false;
        fit.beta = Vector::Zero(kParams);
        fit.beta[0] = fit.weights.dot(y) / fit.weights.sum();
    }
    return fit;
}

double predict(const RegressionFit& fit, double t, int dow) {
    if (dow < 0 || dow > 6) throw std::invalid_argument("weekday outside 0..6");
    double v = fit.beta[0];
    if (fit.has_trend) v += fit.beta[1] * (t - fit.t0);
    if (fit.has_dow && dow > 0) v += fit.beta[1 + dow];
    return v;
}

std::array<double, 7> dow_offsets(const RegressionFit& fit) {
    std::array<double, 7> out{};
    if (fit.has_dow) {
        for (int w = 1; w <= 6; ++w) out[std::size_t(w)] = fit.beta[1 + w];
    }
    return out;
}

}  // namespace epicast::regress
