#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "epicast/config.hpp"
#include "epicast/dates.hpp"
#include "epicast/engine.hpp"
#include "epicast/types.hpp"

using namespace epicast;
namespace fs = std::filesystem;

namespace {

RegionSeries make_region(const std::vector<long>& cases, const std::vector<long>& deaths,
                         double population, std::string id) {
    RegionSeries r;
    r.region_id = std::move(id);
    r.start_day = parse_date("2020-03-01");
    r.population = static_cast<std::int64_t>(population);
    r.daily_cases.resize(Eigen::Index(cases.size()));
    r.daily_deaths.resize(Eigen::Index(deaths.size()));
    for (std::size_t i = 0; i < cases.size(); ++i) {
        r.daily_cases[Eigen::Index(i)] = cases[i];
        r.daily_deaths[Eigen::Index(i)] = deaths[i];
    }
    r.cum_cases = daily_to_cumulative(r.daily_cases);
    r.cum_deaths = daily_to_cumulative(r.daily_deaths);
    return r;
}

// A smoothly growing epidemic with weekday dips and proportional deaths.
RegionSeries synthetic_region(std::string id, int n, double base, double growth) {
    std::vector<long> cases(std::size_t(n), 0);
    std::vector<long> deaths(std::size_t(n), 0);
    double level = base;
    for (int t = 0; t < n; ++t) {
        level *= 1.0 + growth;
        double v = level;
        if (t % 7 == 0) v *= 0.8;  // weekly reporting dip
        cases[std::size_t(t)] = std::lround(v);
        deaths[std::size_t(t)] = std::lround(v / 50.0);
    }
    return make_region(cases, deaths, 1e7, std::move(id));
}

EngineConfig quick_config(int samples = 50, int horizon = 14) {
    EngineConfig cfg = EngineConfig::defaults();
    cfg.samples = samples;
    cfg.horizon = horizon;
    cfg.threads = 1;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(bool(f));
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("ensemble_quantiles matches the interpolated-order-statistic rule") {
    ForecastEnsemble ens;
    ens.samples.resize(100, 1);
    for (Eigen::Index s = 0; s < 100; ++s) ens.samples(s, 0) = s;  // a shuffled set scores the same
    std::reverse(ens.samples.col(0).data(), ens.samples.col(0).data() + 100);

    const Matrix q = engine::ensemble_quantiles(ens, {0.0, 0.5, 0.975, 1.0});
    CHECK(q(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(q(0, 1) == doctest::Approx(49.5).epsilon(1e-15));   // h = 99 * 0.5
    CHECK(q(0, 2) == doctest::Approx(96.525).epsilon(1e-12));  // h = 99 * 0.975
    CHECK(q(0, 3) == doctest::Approx(99.0).epsilon(1e-15));

    ForecastEnsemble flat;
    flat.samples = CountMatrix::Constant(7, 3, 42);
    const Matrix fq = engine::ensemble_quantiles(flat, {0.1, 0.5, 0.9});
    for (Eigen::Index k = 0; k < fq.rows(); ++k) {
        for (Eigen::Index l = 0; l < fq.cols(); ++l) CHECK(fq(k, l) == 42.0);
    }

    ForecastEnsemble empty;
    empty.samples.resize(0, 5);
    CHECK_THROWS_AS(engine::ensemble_quantiles(empty, {0.5}), std::invalid_argument);
}

TEST_CASE("run_forecast completes every region and keeps quantiles monotone") {
    const std::vector<RegionSeries> input = {synthetic_region("aland", 120, 40.0, 0.02),
                                             synthetic_region("borduria", 120, 200.0, -0.01)};
    const auto cfg = quick_config();
    const auto run = engine::run_forecast(input, cfg);

    REQUIRE(run.regions.size() == 2);
    for (const auto& r : run.regions) {
        INFO(r.region_id, ": ", r.error);
        REQUIRE(r.ok());
        CHECK(r.cases.ensemble.sample_count() == cfg.samples);
        CHECK(r.cases.ensemble.horizon() == cfg.horizon);
        CHECK(r.deaths.ensemble.sample_count() == cfg.samples);
        CHECK(r.adjusted.cum_cases[r.adjusted.size() - 1] ==
              r.adjusted.daily_cases.sum());

        for (const ForecastEnsemble* ens : {&r.cases.ensemble, &r.deaths.ensemble}) {
            const Matrix q = engine::ensemble_quantiles(*ens, cfg.quantile_levels);
            for (Eigen::Index k = 0; k < q.rows(); ++k) {
                for (Eigen::Index l = 1; l < q.cols(); ++l) CHECK(q(k, l) >= q(k, l - 1));
            }
        }
    }
}

TEST_CASE("run_forecast is deterministic and thread-count independent") {
    const std::vector<RegionSeries> input = {synthetic_region("aland", 100, 40.0, 0.02),
                                             synthetic_region("borduria", 100, 150.0, 0.0),
                                             synthetic_region("cisalpina", 100, 90.0, -0.02)};
    auto cfg = quick_config(40, 10);
    cfg.threads = 1;
    const auto one = engine::run_forecast(input, cfg);
    const auto one_again = engine::run_forecast(input, cfg);
    cfg.threads = 3;
    const auto three = engine::run_forecast(input, cfg);

    REQUIRE(one.regions.size() == 3);
    for (std::size_t i = 0; i < input.size(); ++i) {
        REQUIRE(one.regions[i].ok());
        CHECK(one.regions[i].cases.ensemble.samples == one_again.regions[i].cases.ensemble.samples);
        CHECK(one.regions[i].cases.ensemble.samples == three.regions[i].cases.ensemble.samples);
        CHECK(one.regions[i].deaths.ensemble.samples == three.regions[i].deaths.ensemble.samples);
    }

    // The emitted artifacts agree byte for byte across thread counts.
    const fs::path d1 = fresh_dir("epicast_engine_t1");
    const fs::path d3 = fresh_dir("epicast_engine_t3");
    engine::write_outputs(one, d1.string());
    engine::write_outputs(three, d3.string());
    for (const char* name : {"quantiles.csv", "summary.csv", "plotdata.json"}) {
        CHECK(slurp(d1 / name) == slurp(d3 / name));
    }
    fs::remove_all(d1);
    fs::remove_all(d3);
}

TEST_CASE("run_forecast isolates per-region failures") {
    std::vector<RegionSeries> input = {synthetic_region("aland", 120, 40.0, 0.02),
                                       synthetic_region("shortland", 20, 40.0, 0.02)};
    const auto run = engine::run_forecast(input, quick_config());
    REQUIRE(run.regions.size() == 2);
    CHECK(run.regions[0].ok());
    CHECK_FALSE(run.regions[1].ok());
    CHECK(run.regions[1].error.find("28 days") != std::string::npos);

    const fs::path dir = fresh_dir("epicast_engine_fail");
    engine::write_outputs(run, dir.string());
    const std::string summary = slurp(dir / "summary.csv");
    CHECK(summary.find("aland,ok") != std::string::npos);
    CHECK(summary.find("shortland,failed") != std::string::npos);
    // Failed regions contribute no quantile rows.
    CHECK(slurp(dir / "quantiles.csv").find("shortland") == std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("a single sample pins every quantile level to its path") {
    const std::vector<RegionSeries> input = {synthetic_region("aland", 100, 60.0, 0.01)};
    const auto run = engine::run_forecast(input, quick_config(1, 7));
    REQUIRE(run.regions[0].ok());
    const auto& ens = run.regions[0].cases.ensemble;
    const Matrix q = engine::ensemble_quantiles(ens, run.config.quantile_levels);
    for (Eigen::Index k = 0; k < q.rows(); ++k) {
        for (Eigen::Index l = 0; l < q.cols(); ++l) {
            CHECK(q(k, l) == double(ens.samples(0, k)));
        }
    }
}

TEST_CASE("write_outputs emits the optional files only on request") {
    const std::vector<RegionSeries> input = {synthetic_region("aland", 120, 40.0, 0.02)};
    auto cfg = quick_config();

    const fs::path plain_dir = fresh_dir("epicast_engine_plain");
    const auto plain = engine::write_outputs(engine::run_forecast(input, cfg), plain_dir.string());
    CHECK(plain.size() == 3);
    for (const char* name : {"quantiles.csv", "summary.csv", "plotdata.json"}) {
        CHECK(fs::exists(plain_dir / name));
    }
    CHECK_FALSE(fs::exists(plain_dir / "samples.csv"));

    cfg.emit_samples = true;
    cfg.emit_posterior = true;
    cfg.emit_outliers = true;
    const fs::path full_dir = fresh_dir("epicast_engine_full");
    const auto run = engine::run_forecast(input, cfg);
    const auto full = engine::write_outputs(run, full_dir.string());
    CHECK(full.size() == 7);
    for (const char* name : {"quantiles.csv", "summary.csv", "plotdata.json", "samples.csv",
                             "posterior.csv", "deaths_posterior.csv", "outliers.csv"}) {
        CHECK(fs::exists(full_dir / name));
    }

    // plotdata.json is valid JSON carrying the whole picture for plotting.
    const auto doc = nlohmann::json::parse(slurp(full_dir / "plotdata.json"));
    CHECK(doc.at("schema") == "epicast-plotdata-v1");
    REQUIRE(doc.at("regions").size() == 1);
    const auto& region = doc.at("regions")[0];
    CHECK(region.at("id") == "aland");
    CHECK(region.at("status") == "ok");
    CHECK(region.at("observed").at("cases").size() == 120);
    CHECK(region.at("forecast").at("dates").size() == std::size_t(cfg.horizon));
    CHECK(region.at("forecast").at("cases")[0].size() == cfg.quantile_levels.size());
    CHECK(region.at("posterior").at("prob").size() ==
          cfg.eta_grid.size() * cfg.omega_grid.size() * cfg.phi_grid.size());

    // samples.csv holds one row per (kind, sample, day).
    const std::string samples = slurp(full_dir / "samples.csv");
    const auto lines = std::count(samples.begin(), samples.end(), '\n');
    CHECK(lines == 1 + 2 * cfg.samples * cfg.horizon);

    fs::remove_all(plain_dir);
    fs::remove_all(full_dir);
}

TEST_CASE("run_backtest scores usable origins and warns about the rest") {
    const auto region = synthetic_region("aland", 120, 40.0, 0.02);
    const std::vector<RegionSeries> input = {region};
    auto cfg = quick_config(30, 14);

    const Day early = region.start_day + 30;   // only 31 days of history
    const Day valid = region.start_day + 60;   // plenty both ways
    const Day late = region.start_day + 115;   // only 4 days of truth left
    const auto report = engine::run_backtest(input, {early, valid, late}, cfg);

    CHECK(report.skipped.size() == 2);
    CHECK(report.rows.size() == std::size_t(2 * cfg.horizon));  // cases + deaths
    CHECK(report.skipped[0].find("history") != std::string::npos);
    CHECK(report.skipped[1].find("after the origin") != std::string::npos);

    std::set<int> ks;
    for (const auto& row : report.rows) {
        CHECK(row.origin == valid);
        CHECK(row.lo80 <= row.lo50);
        CHECK(row.lo50 <= row.median);
        CHECK(row.median <= row.hi50);
        CHECK(row.hi50 <= row.hi80);
        // Truth is read from the untruncated series.
        const auto& truth_series =
            row.kind == SeriesKind::cases ? region.daily_cases : region.daily_deaths;
        CHECK(row.truth == truth_series[60 + row.k]);
        ks.insert(row.k);
    }
    CHECK(ks.size() == std::size_t(cfg.horizon));
    CHECK(report.coverage50 >= 0.0);
    CHECK(report.coverage50 <= 1.0);
    CHECK(report.coverage80 >= report.coverage50);

    const fs::path dir = fresh_dir("epicast_engine_bt");
    const std::string path = engine::write_backtest_csv(report, dir.string());
    const std::string csv = slurp(path);
    CHECK(csv.rfind("region,origin_date,kind,horizon_day", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + long(report.rows.size()));
    fs::remove_all(dir);
}

TEST_CASE("backtest origins are scored independently of the origin list") {
    const auto region = synthetic_region("aland", 130, 40.0, 0.02);
    const std::vector<RegionSeries> input = {region};
    auto cfg = quick_config(25, 10);

    const Day o1 = region.start_day + 55;
    const Day o2 = region.start_day + 90;
    const auto solo = engine::run_backtest(input, {o1}, cfg);
    const auto both = engine::run_backtest(input, {o1, o2}, cfg);

    REQUIRE(solo.rows.size() * 2 == both.rows.size());
    for (std::size_t i = 0; i < solo.rows.size(); ++i) {
        CHECK(solo.rows[i].median == both.rows[i].median);
        CHECK(solo.rows[i].lo80 == both.rows[i].lo80);
        CHECK(solo.rows[i].hi80 == both.rows[i].hi80);
        CHECK(solo.rows[i].truth == both.rows[i].truth);
    }
}
