#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "epicast/growth.hpp"
#include "epicast/stats.hpp"

using namespace epicast;

namespace {

CountVector cumulative(std::initializer_list<std::int64_t> v) {
    CountVector out(Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (auto x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("growth rate is the ratio of consecutive cumulatives minus one") {
    const Vector r = growth::empirical_growth_rate(cumulative({100, 110}));
    REQUIRE(r.size() == 2);
    CHECK(std::isnan(r[0]));
    CHECK(r[1] == doctest::Approx(0.1));

    const Vector flat = growth::empirical_growth_rate(cumulative({50, 50, 50}));
    CHECK(std::isnan(flat[0]));
    CHECK(flat[1] == 0.0);
    CHECK(flat[2] == 0.0);

    const Vector doubling = growth::empirical_growth_rate(cumulative({1, 2, 4, 8}));
    for (Eigen::Index i = 1; i < 4; ++i) CHECK(doubling[i] == doctest::Approx(1.0));
}

TEST_CASE("evaluation starts after the cumulative first turns positive") {
    const Vector r = growth::empirical_growth_rate(cumulative({0, 0, 5, 6}));
    CHECK(std::isnan(r[0]));
    CHECK(std::isnan(r[1]));
    CHECK(std::isnan(r[2]));  // previous cumulative is zero
    CHECK(r[3] == doctest::Approx(0.2));

    const Vector none = growth::empirical_growth_rate(cumulative({0, 0, 0}));
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::isnan(none[i]));
}

TEST_CASE("tau is 95 percent of the smallest positive rate") {
    Vector raw(3);
    raw << 0.0, 0.2, 0.1;
    CHECK(growth::compute_tau(raw).value() == doctest::Approx(0.095));

    Vector one(1);
    one << 0.5;
    CHECK(growth::compute_tau(one).value() == doctest::Approx(0.475));

    Vector zeros(2);
    zeros << 0.0, 0.0;
    CHECK_FALSE(growth::compute_tau(zeros).has_value());

    // NaN alignment entries are ignored
    Vector with_nan(3);
    with_nan << std::nan(""), 0.2, 0.1;
    CHECK(growth::compute_tau(with_nan).value() == doctest::Approx(0.095));

    // explosive growth pushes tau out of (0, 0.5)
    Vector explosive(2);
    explosive << 0.8, 0.9;
    CHECK_THROWS_AS(growth::compute_tau(explosive), std::runtime_error);
}

TEST_CASE("clamped logit pins the tails and is monotone") {
    const double tau = 0.095;
    CHECK(growth::clamped_logit(0.5, tau) == 0.0);
    CHECK(growth::clamped_logit(0.0, tau) ==
          doctest::Approx(-2.2540580520993854).epsilon(1e-14));
    CHECK(growth::clamped_logit(3.0, tau) ==
          doctest::Approx(2.2540580520993854).epsilon(1e-14));
    CHECK(std::isnan(growth::clamped_logit(std::nan(""), tau)));

    // raw ordering is preserved
    Vector raw(7);
    raw << -0.2, 0.0, 0.05, 0.095, 0.4, 0.905, 2.0;
    const Vector lg = growth::clamped_logit(raw, tau);
    for (Eigen::Index i = 1; i < raw.size(); ++i) CHECK(lg[i] >= lg[i - 1]);

    // inverse consistency with the plain clamp
    for (double x : {-1.0, 0.0, 0.01, 0.095, 0.3, 0.89, 0.95, 7.0}) {
        const double back = stats::inverse_logit(growth::clamped_logit(x, tau));
        const double clamped = std::min(std::max(x, tau), 1.0 - tau);
        CHECK(back == doctest::Approx(clamped).epsilon(1e-12));
    }

    CHECK_THROWS_AS(growth::clamped_logit(raw, 0.6), std::invalid_argument);
}

TEST_CASE("constant-cases rate reproduces the target incidence in one step") {
    const double tau = 0.01;
    const double ybar = 100.0, cum_prev = 1000.0, delta_s0 = 55000.0;
    const double k = growth::kappa_constant(ybar, cum_prev, delta_s0, tau);
    // push through one step of the susceptible-depletion recursion
    const double rate = stats::inverse_logit(k);
    const double produced = rate * ((delta_s0 - cum_prev) / delta_s0) * cum_prev;
    CHECK(produced == doctest::Approx(ybar).epsilon(1e-9));

    // zero incidence pins the rate at the lower clamp
    CHECK(growth::kappa_constant(0.0, cum_prev, delta_s0, tau) ==
          doctest::Approx(stats::logit(tau)));

    // absurdly high incidence pins it at the upper clamp
    CHECK(growth::kappa_constant(1e9, cum_prev, delta_s0, tau) ==
          doctest::Approx(stats::logit(1.0 - tau)));

    CHECK_THROWS_AS(growth::kappa_constant(10.0, 56000.0, delta_s0, tau), std::runtime_error);
    CHECK_THROWS_AS(growth::kappa_constant(10.0, 0.0, delta_s0, tau), std::invalid_argument);
}

TEST_CASE("trailing week average") {
    CountVector sevens = CountVector::Constant(7, 7);
    CHECK(growth::average_last_week(sevens, 6) == doctest::Approx(7.0));

    CountVector one_spike(7);
    one_spike << 0, 0, 0, 0, 0, 0, 7;
    CHECK(growth::average_last_week(one_spike, 6) == doctest::Approx(1.0));

    CountVector ramp(7);
    ramp << 1, 2, 3, 4, 5, 6, 7;
    CHECK(growth::average_last_week(ramp, 6) == doctest::Approx(4.0));

    CountVector longer(10);
    longer << 9, 9, 9, 1, 2, 3, 4, 5, 6, 7;
    CHECK(growth::average_last_week(longer, 9) == doctest::Approx(4.0));

    CHECK_THROWS_AS(growth::average_last_week(sevens, 5), std::invalid_argument);
    CHECK_THROWS_AS(growth::average_last_week(sevens, 7), std::invalid_argument);
}

TEST_CASE("assembled growth series aligns raw, logit, and tau") {
    const auto gs = growth::make_growth_series(cumulative({0, 10, 12, 12, 18}));
    REQUIRE(gs.has_value());
    // raw: NaN, NaN, 0.2, 0.0, 0.5 -> min positive 0.2 -> tau 0.19
    CHECK(gs->tau == doctest::Approx(0.19));
    CHECK(gs->first_valid == 2);
    CHECK(std::isnan(gs->raw[1]));
    CHECK(gs->raw[2] == doctest::Approx(0.2));
    CHECK(gs->logit[2] == doctest::Approx(stats::logit(0.2)));
    CHECK(gs->logit[3] == doctest::Approx(stats::logit(0.19)));  // clamped up
    CHECK(gs->logit[4] == doctest::Approx(stats::logit(0.5)));

    CHECK_FALSE(growth::make_growth_series(cumulative({0, 0, 0})).has_value());
    CHECK_FALSE(growth::make_growth_series(cumulative({5, 5, 5})).has_value());
}
