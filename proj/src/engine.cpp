#include "epicast/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "epicast/blend.hpp"
#include "epicast/rng.hpp"
#include "epicast/stats.hpp"

namespace epicast::engine {
namespace {

using nlohmann::json;

std::string fmt(double v, const char* format) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}
std::string fmt_count(double v) { return fmt(v, "%.10g"); }
std::string fmt_prob(double v) { return fmt(v, "%.12g"); }

std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

RegionResult run_region(const RegionSeries& input, const EngineConfig& config) {
    RegionResult res;
    res.region_id = input.region_id;
    res.observed = input;
    try {
        input.validate();
        const int first_weekday = weekday_of(input.start_day);
        res.case_outliers = outliers::clean_series(input.daily_cases, first_weekday, config.outliers);
        res.death_outliers =
            outliers::clean_series(input.daily_deaths, first_weekday, config.outliers);

        res.adjusted = input;
        res.adjusted.daily_cases = res.case_outliers.adjusted;
        res.adjusted.daily_deaths = res.death_outliers.adjusted;
        res.adjusted.cum_cases = daily_to_cumulative(res.adjusted.daily_cases);
        res.adjusted.cum_deaths = daily_to_cumulative(res.adjusted.daily_deaths);

        res.cases = simulate::forecast_cases(res.adjusted, config, config.seed);
        res.deaths = deaths::forecast_deaths(res.adjusted, res.cases, config, config.seed);
    } catch (const std::exception& e) {
        res.error = e.what();
        if (res.error.empty()) res.error = "unknown pipeline failure";
    }
    return res;
}

/// Run `count` jobs on `threads` workers (0 = hardware concurrency). The
/// callable fills an indexed slot, so the schedule never affects results.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (count == 0) return;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned want = threads > 0 ? static_cast<unsigned>(threads) : hw;
    const unsigned workers = std::max(1u, std::min<unsigned>(want, static_cast<unsigned>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num_or_null(v[i]));
    return a;
}

json counts_json(const CountVector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json ribbon_json(const Matrix& q) {
    json days = json::array();
    for (Eigen::Index k = 0; k < q.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index l = 0; l < q.cols(); ++l) row.push_back(num_or_null(q(k, l)));
        days.push_back(std::move(row));
    }
    return days;
}

json region_json(const RegionResult& r, const EngineConfig& cfg) {
    json out;
    out["id"] = r.region_id;
    out["status"] = r.ok() ? "ok" : "failed";
    out["error"] = r.ok() ? json(nullptr) : json(r.error);
    out["population"] = r.observed.population;
    out["start_date"] = format_date(r.observed.start_day);
    out["forecast_date"] = format_date(r.observed.last_day());
    out["observed"] = {{"cases", counts_json(r.observed.daily_cases)},
                       {"deaths", counts_json(r.observed.daily_deaths)}};
    if (!r.ok()) {
        out["adjusted"] = nullptr;
        out["outliers"] = nullptr;
        out["regimes"] = nullptr;
        out["rates"] = nullptr;
        out["posterior"] = nullptr;
        out["deaths_posterior"] = nullptr;
        out["forecast"] = nullptr;
        return out;
    }

    out["adjusted"] = {{"cases", counts_json(r.adjusted.daily_cases)},
                       {"deaths", counts_json(r.adjusted.daily_deaths)}};

    json flagged_cases = json::array(), flagged_deaths = json::array();
    for (std::size_t i = 0; i < r.case_outliers.flags.size(); ++i) {
        if (r.case_outliers.flags[i]) flagged_cases.push_back(i);
    }
    for (std::size_t i = 0; i < r.death_outliers.flags.size(); ++i) {
        if (r.death_outliers.flags[i]) flagged_deaths.push_back(i);
    }
    out["outliers"] = {{"cases", std::move(flagged_cases)}, {"deaths", std::move(flagged_deaths)}};

    out["regimes"] = {{"cases", simulate::to_string(r.cases.regime)},
                      {"deaths", simulate::to_string(r.deaths.regime)}};

    if (r.cases.rates) {
        json rates;
        rates["tau"] = r.cases.rates->tau;
        rates["raw"] = vector_json(r.cases.rates->raw);
        rates["logit"] = vector_json(r.cases.rates->logit);
        if (r.cases.split) {
            rates["train"] = {r.cases.split->train_begin, r.cases.split->train_end};
            rates["test"] = {r.cases.split->test_begin, r.cases.split->test_end};
        } else {
            rates["train"] = nullptr;
            rates["test"] = nullptr;
        }
        out["rates"] = std::move(rates);
    } else {
        out["rates"] = nullptr;
    }

    if (r.cases.posterior) {
        json p;
        json eta = json::array(), omega = json::array(), phi = json::array();
        for (const auto& c : r.cases.posterior->candidates) {
            eta.push_back(c.eta);
            omega.push_back(c.omega);
            phi.push_back(c.phi);
        }
        p["eta"] = std::move(eta);
        p["omega"] = std::move(omega);
        p["phi"] = std::move(phi);
        p["distance"] = vector_json(r.cases.posterior->distances);
        p["prob"] = vector_json(r.cases.posterior->probs);
        out["posterior"] = std::move(p);
    } else {
        out["posterior"] = nullptr;
    }

    if (r.deaths.posterior) {
        json p;
        json nu = json::array(), lower = json::array(), upper = json::array();
        for (const auto& c : r.deaths.posterior->candidates) {
            nu.push_back(c.nu);
            lower.push_back(c.theta_lower);
            upper.push_back(c.theta_upper);
        }
        p["nu"] = std::move(nu);
        p["theta_lower"] = std::move(lower);
        p["theta_upper"] = std::move(upper);
        p["distance"] = vector_json(r.deaths.posterior->distances);
        p["prob"] = vector_json(r.deaths.posterior->probs);
        out["deaths_posterior"] = std::move(p);
    } else {
        out["deaths_posterior"] = nullptr;
    }

    json dates = json::array();
    for (Eigen::Index k = 0; k < r.cases.ensemble.horizon(); ++k) {
        dates.push_back(format_date(r.cases.ensemble.first_target_day + k));
    }
    out["forecast"] = {
        {"dates", std::move(dates)},
        {"cases", ribbon_json(ensemble_quantiles(r.cases.ensemble, cfg.quantile_levels))},
        {"deaths", ribbon_json(ensemble_quantiles(r.deaths.ensemble, cfg.quantile_levels))}};
    return out;
}

RegionSeries truncate_series(const RegionSeries& r, Eigen::Index days) {
    RegionSeries t;
    t.region_id = r.region_id;
    t.start_day = r.start_day;
    t.population = r.population;
    t.daily_cases = r.daily_cases.head(days);
    t.cum_cases = r.cum_cases.head(days);
    t.daily_deaths = r.daily_deaths.head(days);
    t.cum_deaths = r.cum_deaths.head(days);
    for (Eigen::Index i : r.clamped_cases) {
        if (i < days) t.clamped_cases.push_back(i);
    }
    for (Eigen::Index i : r.clamped_deaths) {
        if (i < days) t.clamped_deaths.push_back(i);
    }
    return t;
}

}  // namespace

ForecastRun run_forecast(const std::vector<RegionSeries>& input, const EngineConfig& config) {
    EngineConfig cfg = config;
    cfg.validate();
    ForecastRun run;
    run.config = cfg;
    run.regions.resize(input.size());
    parallel_for(input.size(), cfg.threads,
                 [&](std::size_t i) { run.regions[i] = run_region(input[i], cfg); });
    return run;
}

Matrix ensemble_quantiles(const ForecastEnsemble& ensemble, const std::vector<double>& levels) {
    if (ensemble.sample_count() < 1) throw std::invalid_argument("ensemble holds no samples");
    const Eigen::Index horizon = ensemble.horizon();
    Matrix out(horizon, static_cast<Eigen::Index>(levels.size()));
    std::vector<double> column(static_cast<std::size_t>(ensemble.sample_count()));
    for (Eigen::Index k = 0; k < horizon; ++k) {
        for (Eigen::Index s = 0; s < ensemble.sample_count(); ++s) {
            column[static_cast<std::size_t>(s)] = static_cast<double>(ensemble.samples(s, k));
        }
        std::sort(column.begin(), column.end());
        for (std::size_t l = 0; l < levels.size(); ++l) {
            out(k, static_cast<Eigen::Index>(l)) = stats::quantile_sorted(column, levels[l]);
        }
    }
    return out;
}

std::vector<std::string> write_outputs(const ForecastRun& run, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const EngineConfig& cfg = run.config;
    std::vector<std::string> written;

    struct KindView {
        const char* name;
        const ForecastEnsemble* ensemble;
    };
    const auto kinds_of = [](const RegionResult& r) {
        return std::vector<KindView>{{"cases", &r.cases.ensemble}, {"deaths", &r.deaths.ensemble}};
    };

    {
        const fs::path path = fs::path(out_dir) / "quantiles.csv";
        auto f = open_output(path);
        f << "region,forecast_date,target_date,kind,quantile_level,value\n";
        for (const auto& r : run.regions) {
            if (!r.ok()) continue;
            const std::string forecast_date = format_date(r.observed.last_day());
            for (const auto& kv : kinds_of(r)) {
                const Matrix q = ensemble_quantiles(*kv.ensemble, cfg.quantile_levels);
                for (Eigen::Index k = 0; k < q.rows(); ++k) {
                    const std::string target = format_date(kv.ensemble->first_target_day + k);
                    for (Eigen::Index l = 0; l < q.cols(); ++l) {
                        f << quote_csv(r.region_id) << ',' << forecast_date << ',' << target << ','
                          << kv.name << ',' << fmt_prob(cfg.quantile_levels[std::size_t(l)]) << ','
                          << fmt_count(q(k, l)) << '\n';
                    }
                }
            }
        }
        written.push_back(path.string());
    }

    {
        const fs::path path = fs::path(out_dir) / "summary.csv";
        auto f = open_output(path);
        f << "region,status,case_regime,death_regime,tau,alpha,message\n";
        for (const auto& r : run.regions) {
            f << quote_csv(r.region_id) << ',' << (r.ok() ? "ok" : "failed") << ','
              << (r.ok() ? simulate::to_string(r.cases.regime) : "") << ','
              << (r.ok() ? simulate::to_string(r.deaths.regime) : "") << ','
              << (r.ok() && r.cases.rates ? fmt_prob(r.cases.rates->tau) : "") << ','
              << (r.ok() && r.cases.dispersion ? fmt_prob(r.cases.dispersion->alpha_hat) : "")
              << ',' << quote_csv(r.error) << '\n';
        }
        written.push_back(path.string());
    }

    if (cfg.emit_samples) {
        const fs::path path = fs::path(out_dir) / "samples.csv";
        auto f = open_output(path);
        f << "region,kind,sample_id,target_date,value\n";
        for (const auto& r : run.regions) {
            if (!r.ok()) continue;
            for (const auto& kv : kinds_of(r)) {
                for (Eigen::Index s = 0; s < kv.ensemble->sample_count(); ++s) {
                    for (Eigen::Index k = 0; k < kv.ensemble->horizon(); ++k) {
                        f << quote_csv(r.region_id) << ',' << kv.name << ',' << s << ','
                          << format_date(kv.ensemble->first_target_day + k) << ','
                          << kv.ensemble->samples(s, k) << '\n';
                    }
                }
            }
        }
        written.push_back(path.string());
    }

    if (cfg.emit_posterior) {
        {
            const fs::path path = fs::path(out_dir) / "posterior.csv";
            auto f = open_output(path);
            f << "region,eta,omega,phi,distance,prob\n";
            for (const auto& r : run.regions) {
                if (!r.ok() || !r.cases.posterior) continue;
                const auto& post = *r.cases.posterior;
                for (std::size_t i = 0; i < post.candidates.size(); ++i) {
                    const auto& c = post.candidates[i];
                    f << quote_csv(r.region_id) << ',' << fmt_prob(c.eta) << ','
                      << fmt_prob(c.omega) << ',' << fmt_prob(c.phi) << ','
                      << fmt_prob(post.distances[Eigen::Index(i)]) << ','
                      << fmt_prob(post.probs[Eigen::Index(i)]) << '\n';
                }
            }
            written.push_back(path.string());
        }
        {
            const fs::path path = fs::path(out_dir) / "deaths_posterior.csv";
            auto f = open_output(path);
            f << "region,nu,theta_lower,theta_upper,distance,prob\n";
            for (const auto& r : run.regions) {
                if (!r.ok() || !r.deaths.posterior) continue;
                const auto& post = *r.deaths.posterior;
                for (std::size_t i = 0; i < post.candidates.size(); ++i) {
                    const auto& c = post.candidates[i];
                    f << quote_csv(r.region_id) << ',' << c.nu << ',' << fmt_prob(c.theta_lower)
                      << ',' << fmt_prob(c.theta_upper) << ','
                      << fmt_prob(post.distances[Eigen::Index(i)]) << ','
                      << fmt_prob(post.probs[Eigen::Index(i)]) << '\n';
                }
            }
            written.push_back(path.string());
        }
    }

    if (cfg.emit_outliers) {
        const fs::path path = fs::path(out_dir) / "outliers.csv";
        auto f = open_output(path);
        f << "region,kind,date,original,votes,adjusted\n";
        for (const auto& r : run.regions) {
            if (!r.ok()) continue;
            struct View {
                const char* name;
                const outliers::OutlierReport* report;
                const CountVector* original;
            };
            const View views[] = {{"cases", &r.case_outliers, &r.observed.daily_cases},
                                  {"deaths", &r.death_outliers, &r.observed.daily_deaths}};
            for (const auto& view : views) {
                for (Eigen::Index i = 0; i < view.report->votes.size(); ++i) {
                    if (view.report->votes[i] == 0) continue;
                    f << quote_csv(r.region_id) << ',' << view.name << ','
                      << format_date(r.observed.day_at(i)) << ',' << (*view.original)[i] << ','
                      << view.report->votes[i] << ',' << view.report->adjusted[i] << '\n';
                }
            }
        }
        written.push_back(path.string());
    }

    {
        const fs::path path = fs::path(out_dir) / "plotdata.json";
        auto f = open_output(path);
        json doc;
        doc["schema"] = "epicast-plotdata-v1";
        doc["horizon"] = cfg.horizon;
        doc["samples"] = cfg.samples;
        doc["seed"] = cfg.seed;
        json levels = json::array();
        for (double q : cfg.quantile_levels) levels.push_back(q);
        doc["quantile_levels"] = std::move(levels);
        json regions = json::array();
        for (const auto& r : run.regions) regions.push_back(region_json(r, cfg));
        doc["regions"] = std::move(regions);
        f << doc.dump(2) << '\n';
        written.push_back(path.string());
    }

    return written;
}

BacktestReport run_backtest(const std::vector<RegionSeries>& input,
                            const std::vector<Day>& origins, const EngineConfig& config) {
    EngineConfig cfg = config;
    cfg.validate();

    struct Job {
        std::size_t region = 0;
        std::size_t origin = 0;
    };
    std::vector<Job> jobs;
    jobs.reserve(input.size() * origins.size());
    for (std::size_t oi = 0; oi < origins.size(); ++oi) {
        for (std::size_t ri = 0; ri < input.size(); ++ri) jobs.push_back({ri, oi});
    }

    struct Outcome {
        std::vector<BacktestRow> rows;
        std::string warning;
    };
    std::vector<Outcome> outcomes(jobs.size());

    parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
        const RegionSeries& region = input[jobs[j].region];
        const Day origin = origins[jobs[j].origin];
        Outcome& out = outcomes[j];
        const auto tag = [&] { return region.region_id + " @ " + format_date(origin); };

        const Eigen::Index idx = origin - region.start_day;
        if (idx < 41) {
            out.warning = tag() + ": skipped, needs 42 days of history up to the origin";
            return;
        }
        if (idx + cfg.horizon >= region.size()) {
            out.warning = tag() + ": skipped, needs " + std::to_string(cfg.horizon) +
                          " observed days after the origin";
            return;
        }

        EngineConfig local = cfg;
        local.seed = rng::splitmix64(cfg.seed ^ static_cast<std::uint64_t>(origin));
        const RegionResult res = run_region(truncate_series(region, idx + 1), local);
        if (!res.ok()) {
            out.warning = tag() + ": skipped, " + res.error;
            return;
        }

        const std::vector<double> interval_levels{0.10, 0.25, 0.50, 0.75, 0.90};
        struct KindView {
            SeriesKind kind;
            const ForecastEnsemble* ensemble;
            const CountVector* truth;
        };
        const KindView kinds[] = {{SeriesKind::cases, &res.cases.ensemble, &region.daily_cases},
                                  {SeriesKind::deaths, &res.deaths.ensemble, &region.daily_deaths}};
        for (const auto& kv : kinds) {
            const Matrix q = ensemble_quantiles(*kv.ensemble, interval_levels);
            for (int k = 1; k <= cfg.horizon; ++k) {
                BacktestRow row;
                row.region_id = region.region_id;
                row.origin = origin;
                row.kind = kv.kind;
                row.k = k;
                row.truth = (*kv.truth)[idx + k];
                row.lo80 = q(k - 1, 0);
                row.lo50 = q(k - 1, 1);
                row.median = q(k - 1, 2);
                row.hi50 = q(k - 1, 3);
                row.hi80 = q(k - 1, 4);
                const double t = static_cast<double>(row.truth);
                row.in50 = row.lo50 <= t && t <= row.hi50;
                row.in80 = row.lo80 <= t && t <= row.hi80;
                out.rows.push_back(std::move(row));
            }
        }
    });

    BacktestReport report;
    for (auto& out : outcomes) {
        if (!out.warning.empty()) report.skipped.push_back(std::move(out.warning));
        for (auto& row : out.rows) report.rows.push_back(std::move(row));
    }
    if (!report.rows.empty()) {
        double hit50 = 0, hit80 = 0, abs_err = 0;
        for (const auto& row : report.rows) {
            hit50 += row.in50 ? 1.0 : 0.0;
            hit80 += row.in80 ? 1.0 : 0.0;
            abs_err += std::abs(static_cast<double>(row.truth) - row.median);
        }
        const double n = static_cast<double>(report.rows.size());
        report.coverage50 = hit50 / n;
        report.coverage80 = hit80 / n;
        report.mae_of_median = abs_err / n;
    }
    return report;
}

std::string write_backtest_csv(const BacktestReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path path = fs::path(out_dir) / "backtest.csv";
    auto f = open_output(path);
    f << "region,origin_date,kind,horizon_day,target_date,truth,median,lo50,hi50,lo80,hi80,in50,"
         "in80\n";
    for (const auto& row : report.rows) {
        f << quote_csv(row.region_id) << ',' << format_date(row.origin) << ','
          << to_string(row.kind) << ',' << row.k << ',' << format_date(row.origin + row.k) << ','
          << row.truth << ',' << fmt_count(row.median) << ',' << fmt_count(row.lo50) << ','
          << fmt_count(row.hi50) << ',' << fmt_count(row.lo80) << ',' << fmt_count(row.hi80) << ','
          << (row.in50 ? 1 : 0) << ',' << (row.in80 ? 1 : 0) << '\n';
    }
    return path.string();
}

}  // namespace epicast::engine
