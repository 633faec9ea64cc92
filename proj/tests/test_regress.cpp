#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "epicast/regress.hpp"
#include "epicast/rng.hpp"

using namespace epicast;

namespace {

// --- independent least-squares oracle: normal equations solved by hand ---

std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int n = int(a.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(a.size());
    for (int r = n - 1; r >= 0; --r) {
        double s = b[std::size_t(r)];
        for (int c = r + 1; c < n; ++c) s -= a[std::size_t(r)][std::size_t(c)] * x[std::size_t(c)];
        x[std::size_t(r)] = s / a[std::size_t(r)][std::size_t(r)];
    }
    return x;
}

std::vector<double> wls_oracle(const std::vector<std::vector<double>>& x,
                               const std::vector<double>& y, const std::vector<double>& w) {
    const std::size_t n = x.size(), p = x[0].size();
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += w[i] * x[i][a] * y[i];
            for (std::size_t b = 0; b < p; ++b) xtx[a][b] += w[i] * x[i][a] * x[i][b];
        }
    }
    return solve_linear(xtx, xty);
}

/// Design rows in the fit's own layout for a run of consecutive days.
std::vector<std::vector<double>> make_rows(const std::vector<long>& t,
                                           const std::vector<int>& dow, double t0,
                                           bool with_trend, bool with_dow) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::vector<double> r{1.0};
        if (with_trend) r.push_back(double(t[i]) - t0);
        if (with_dow) {
            for (int w = 1; w <= 6; ++w) r.push_back(dow[i] == w ? 1.0 : 0.0);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

double weighted_rss(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                    const std::vector<double>& w, const std::vector<double>& beta) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double fit = 0;
        for (std::size_t a = 0; a < beta.size(); ++a) fit += x[i][a] * beta[a];
        rss += w[i] * (y[i] - fit) * (y[i] - fit);
    }
    return rss;
}

double aic_oracle(double rss, std::size_t n, std::size_t p) {
    return double(n) * std::log(std::max(rss / double(n), 1e-24)) + 2.0 * double(p + 1);
}

struct Fixture {
    std::vector<long> t;
    std::vector<int> dow;
    Vector y;
};

/// 28 consecutive days starting on a Sunday at day number 1000.
Fixture make_fixture(int n = 28) {
    Fixture f;
    f.y.resize(n);
    for (int i = 0; i < n; ++i) {
        f.t.push_back(1000 + i);
        f.dow.push_back(i % 7);
    }
    return f;
}

}  // namespace

TEST_CASE("noise-free linear data selects the trend model and nails the slope") {
    Fixture f = make_fixture();
    const double t0 = 1027.0;
    for (int i = 0; i < 28; ++i) f.y[i] = -1.2 + 0.03 * (double(f.t[std::size_t(i)]) - t0);
    const auto fit = regress::fit_dow_trend(f.t, f.dow, f.y);
    CHECK(fit.has_trend);
    CHECK_FALSE(fit.has_dow);
    CHECK(fit.beta[0] == doctest::Approx(-1.2).epsilon(1e-9));
    CHECK(fit.beta[1] == doctest::Approx(0.03).epsilon(1e-9));
    for (int w = 1; w <= 6; ++w) CHECK(fit.beta[1 + w] == 0.0);
}

TEST_CASE("constant data selects the intercept-only model") {
    Fixture f = make_fixture();
    for (int i = 0; i < 28; ++i) f.y[i] = 0.42;
    const auto fit = regress::fit_dow_trend(f.t, f.dow, f.y);
    CHECK_FALSE(fit.has_trend);
    CHECK_FALSE(fit.has_dow);
    CHECK(fit.beta[0] == doctest::Approx(0.42).epsilon(1e-12));
    for (int i = 1; i < 8; ++i) CHECK(fit.beta[i] == 0.0);
    // prediction anywhere is the constant
    CHECK(regress::predict(fit, 5000.0, 3) == doctest::Approx(0.42));
}

TEST_CASE("noise-free trend plus weekday offsets recovers every coefficient") {
    Fixture f = make_fixture();
    const double offsets[7] = {0.0, 0.1, -0.05, 0.03, 0.07, -0.02, 0.04};
    const double a = 0.3, b = 0.02, t0 = 1027.0;
    for (int i = 0; i < 28; ++i) {
        f.y[i] = a + b * (double(f.t[std::size_t(i)]) - t0) + offsets[f.dow[std::size_t(i)]];
    }
    const auto fit = regress::fit_dow_trend(f.t, f.dow, f.y);
    CHECK(fit.has_trend);
    CHECK(fit.has_dow);
    CHECK(fit.beta[0] == doctest::Approx(a).epsilon(1e-9));
    CHECK(fit.beta[1] == doctest::Approx(b).epsilon(1e-9));
    for (int w = 1; w <= 6; ++w) {
        CHECK(fit.beta[1 + w] == doctest::Approx(offsets[w]).epsilon(1e-9));
    }
    // exact interpolation at a training point
    CHECK(regress::predict(fit, double(f.t[10]), f.dow[10]) ==
          doctest::Approx(f.y[10]).epsilon(1e-9));
    // weekday offset accessor
    const auto off = regress::dow_offsets(fit);
    CHECK(off[0] == 0.0);
    for (int w = 1; w <= 6; ++w) CHECK(off[std::size_t(w)] == doctest::Approx(offsets[w]));
}

TEST_CASE("unit-weight full fit matches the hand-solved normal equations") {
    Fixture f = make_fixture();
    rng::Stream s(rng::derive_stream(7, "regress", 0, 0));
    const double offsets[7] = {0.0, 0.3, -0.2, 0.1, 0.25, -0.15, 0.05};
    for (int i = 0; i < 28; ++i) {
        f.y[i] = 0.5 - 0.04 * i + offsets[f.dow[std::size_t(i)]] + 0.8 * rng::normal01(s);
    }
    const auto fit = regress::fit_dow_trend(f.t, f.dow, f.y);

    // oracle: weighted normal equations with the fit's own weights
    const auto rows = make_rows(f.t, f.dow, fit.t0, fit.has_trend, fit.has_dow);
    const std::vector<double> yv(f.y.data(), f.y.data() + f.y.size());
    const std::vector<double> wv(fit.weights.data(), fit.weights.data() + fit.weights.size());
    const auto beta = wls_oracle(rows, yv, wv);

    std::vector<double> got{fit.beta[0]};
    if (fit.has_trend) got.push_back(fit.beta[1]);
    if (fit.has_dow) {
        for (int w = 1; w <= 6; ++w) got.push_back(fit.beta[1 + w]);
    }
    REQUIRE(got.size() == beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) {
        CHECK(got[i] == doctest::Approx(beta[i]).epsilon(1e-9));
    }
}

TEST_CASE("the selected model attains the minimum AIC among the four candidates") {
    Fixture f = make_fixture();
    rng::Stream s(rng::derive_stream(8, "regress", 0, 0));
    for (int i = 0; i < 28; ++i) {
        f.y[i] = 0.2 + 0.01 * i + (f.dow[std::size_t(i)] == 3 ? 0.3 : 0.0) +
                 0.05 * rng::normal01(s);
    }
    const auto fit = regress::fit_dow_trend(f.t, f.dow, f.y);

    const std::vector<double> yv(f.y.data(), f.y.data() + f.y.size());
    const std::vector<double> wv(fit.weights.data(), fit.weights.data() + fit.weights.size());
    double best = 1e300;
    bool chosen_is_best = false;
    for (bool trend : {false, true}) {
        for (bool dowb : {false, true}) {
            const auto rows = make_rows(f.t, f.dow, fit.t0, trend, dowb);
            const auto beta = wls_oracle(rows, yv, wv);
            const double score = aic_oracle(weighted_rss(rows, yv, wv, beta), 28, rows[0].size());
            if (score < best - 1e-9) {
                best = score;
                chosen_is_best = (trend == fit.has_trend && dowb == fit.has_dow);
            }
        }
    }
    CHECK(chosen_is_best);
}

TEST_CASE("cooks distance matches the leave-one-out definition") {
    const int n = 12;
    Matrix x(n, 2);
    Vector y(n);
    const double ys[n] = {0.2, 1.3, 1.9, 3.2, 3.8, 5.4, 5.9, 7.4, 7.8, 9.3, 9.6, 11.2};
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = double(i);
        y[i] = ys[i];
    }
    const Vector d = regress::cooks_distance(x, y);

    // oracle: refit without each row, D_i = sum_j (yhat_j - yhat_j^(-i))^2 / (p s^2)
    std::vector<std::vector<double>> rows;
    std::vector<double> yv;
    for (int i = 0; i < n; ++i) {
        rows.push_back({1.0, double(i)});
        yv.push_back(y[i]);
    }
    const std::vector<double> ones(std::size_t(n), 1.0);
    const auto beta_full = wls_oracle(rows, yv, ones);
    double rss = 0;
    for (int i = 0; i < n; ++i) {
        const double e = yv[std::size_t(i)] - beta_full[0] - beta_full[1] * double(i);
        rss += e * e;
    }
    const double s2 = rss / double(n - 2);
    for (int i = 0; i < n; ++i) {
        std::vector<std::vector<double>> drop_rows;
        std::vector<double> drop_y;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            drop_rows.push_back(rows[std::size_t(j)]);
            drop_y.push_back(yv[std::size_t(j)]);
        }
        const auto beta_i = wls_oracle(drop_rows, drop_y, std::vector<double>(drop_y.size(), 1.0));
        double diff = 0;
        for (int j = 0; j < n; ++j) {
            const double full_fit = beta_full[0] + beta_full[1] * double(j);
            const double loo_fit = beta_i[0] + beta_i[1] * double(j);
            diff += (full_fit - loo_fit) * (full_fit - loo_fit);
        }
        const double oracle = diff / (2.0 * s2);
        CHECK(d[i] == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("symmetric noise on identical design rows gives equal distances") {
    const int n = 10;
    Matrix x = Matrix::Ones(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = 3.0 + (i % 2 == 0 ? 0.5 : -0.5);
    const Vector d = regress::cooks_distance(x, y);
    for (int i = 1; i < n; ++i) CHECK(d[i] == doctest::Approx(d[0]).epsilon(1e-12));
}

TEST_CASE("a gross outlier attains the maximum distance and the minimum weight") {
    const int n = 12;
    Matrix x(n, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = double(i);
        y[i] = 2.0 + 0.5 * i;
    }
    y[7] += 50.0;
    const Vector d = regress::cooks_distance(x, y);
    Eigen::Index argmax;
    d.maxCoeff(&argmax);
    CHECK(argmax == 7);

    // through the full fit: the outlier carries the smallest weight, and
    // amplifying it never increases that weight
    Fixture f = make_fixture();
    for (int i = 0; i < 28; ++i) f.y[i] = 0.1 + 0.02 * i;
    f.y[13] += 5.0;
    const auto fit1 = regress::fit_dow_trend(f.t, f.dow, f.y);
    Eigen::Index argmin;
    fit1.weights.minCoeff(&argmin);
    CHECK(argmin == 13);

    f.y[13] += 5.0;
    const auto fit2 = regress::fit_dow_trend(f.t, f.dow, f.y);
    CHECK(fit2.weights[13] <= fit1.weights[13] + 1e-12);
}

TEST_CASE("weights are positive with mean one") {
    Fixture f = make_fixture();
    rng::Stream s(rng::derive_stream(9, "regress", 0, 0));
    for (int i = 0; i < 28; ++i) f.y[i] = 0.3 * rng::normal01(s);
    const auto fit = regress::fit_dow_trend(f.t, f.dow, f.y);
    CHECK(fit.weights.minCoeff() > 0.0);
    CHECK(fit.weights.mean() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("input validation") {
    Fixture f = make_fixture(9);
    for (int i = 0; i < 9; ++i) f.y[i] = double(i);
    CHECK_THROWS_AS(regress::fit_dow_trend(f.t, f.dow, f.y), std::invalid_argument);

    Fixture g = make_fixture(12);
    for (int i = 0; i < 12; ++i) {
        g.t[std::size_t(i)] = 1000;  // all the same day
        g.y[i] = double(i);
    }
    CHECK_THROWS_AS(regress::fit_dow_trend(g.t, g.dow, g.y), std::invalid_argument);

    Matrix x = Matrix::Ones(3, 3);
    Vector y(3);
    y << 1, 2, 3;
    CHECK_THROWS_AS(regress::cooks_distance(x, y), std::invalid_argument);
}
