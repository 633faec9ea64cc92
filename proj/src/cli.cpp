#include "epicast/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "epicast/config.hpp"
#include "epicast/engine.hpp"
#include "epicast/ingest.hpp"

namespace epicast::cli {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt_prob(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct CommonOpts {
    std::string data;
    std::string population;
    std::string config_path;
    std::string regions;
    std::string out_dir = "out";
    std::string origins;
    std::uint64_t seed = 0;
    int horizon = 0;
    int samples = 0;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opt) {
    cmd->add_option("--data", opt.data,
                    "one long-layout CSV (region,date,cases,deaths daily counts) or a "
                    "cases.csv,deaths.csv pair of wide cumulative tables")
        ->required();
    cmd->add_option("--population", opt.population, "two-column region,population CSV")
        ->required();
    cmd->add_option("--config", opt.config_path, "key = value config file");
    cmd->add_option("--seed", opt.seed, "base RNG seed");
    cmd->add_option("--horizon", opt.horizon, "forecast days (K)");
    cmd->add_option("--samples", opt.samples, "ensemble paths per region (S)");
    cmd->add_option("--regions", opt.regions, "comma-separated region ids to keep");
    cmd->add_option("--threads", opt.threads, "worker threads (0 = hardware concurrency)");
}

/// Defaults, then the config file, then EPICAST_* environment variables,
/// then explicit flags — later sources win.
EngineConfig make_config(const CLI::App* cmd, const CommonOpts& opt) {
    EngineConfig cfg = EngineConfig::defaults();
    if (!opt.config_path.empty()) load_config_file(opt.config_path, cfg);
    apply_env_overrides(cfg);
    if (cmd->count("--seed") > 0) cfg.seed = opt.seed;
    if (cmd->count("--horizon") > 0) cfg.horizon = opt.horizon;
    if (cmd->count("--samples") > 0) cfg.samples = opt.samples;
    if (cmd->count("--threads") > 0) cfg.threads = opt.threads;
    if (cmd->get_option_no_throw("--emit-samples") && cmd->count("--emit-samples") > 0) {
        cfg.emit_samples = true;
    }
    if (cmd->get_option_no_throw("--emit-posterior") && cmd->count("--emit-posterior") > 0) {
        cfg.emit_posterior = true;
    }
    if (cmd->get_option_no_throw("--emit-outliers") && cmd->count("--emit-outliers") > 0) {
        cfg.emit_outliers = true;
    }
    cfg.validate();
    return cfg;
}

std::vector<RegionSeries> load_selection(const CommonOpts& opt) {
    return filter_regions(load_dataset(opt.data, opt.population), opt.regions);
}

int cmd_forecast(const CLI::App* cmd, const CommonOpts& opt) {
    const EngineConfig cfg = make_config(cmd, opt);
    const auto regions = load_selection(opt);
    if (regions.empty()) {
        std::cerr << "epicast: no regions to forecast\n";
        return 1;
    }

    const auto run = engine::run_forecast(regions, cfg);
    std::size_t ok = 0;
    for (const auto& r : run.regions) {
        if (r.ok()) {
            ++ok;
            std::cout << r.region_id << ": ok (cases " << simulate::to_string(r.cases.regime)
                      << ", deaths " << simulate::to_string(r.deaths.regime) << ")\n";
        } else {
            std::cout << r.region_id << ": failed: " << r.error << '\n';
        }
    }
    for (const auto& path : engine::write_outputs(run, opt.out_dir)) {
        std::cout << "wrote " << path << '\n';
    }
    if (ok == 0) {
        std::cerr << "epicast: every region failed\n";
        return 1;
    }
    return 0;
}

int cmd_backtest(const CLI::App* cmd, const CommonOpts& opt) {
    const EngineConfig cfg = make_config(cmd, opt);
    const auto regions = load_selection(opt);
    if (regions.empty()) {
        std::cerr << "epicast: no regions to backtest\n";
        return 1;
    }

    const auto report = engine::run_backtest(regions, parse_origin_list(opt.origins), cfg);
    for (const auto& warning : report.skipped) std::cerr << "warning: " << warning << '\n';
    if (report.rows.empty()) {
        std::cerr << "epicast: no (origin, day) pair could be scored\n";
        return 1;
    }
    std::cout << "scored " << report.rows.size() << " rows: coverage50=" << fmt_prob(report.coverage50)
              << " coverage80=" << fmt_prob(report.coverage80)
              << " mae(median)=" << fmt_prob(report.mae_of_median) << '\n';
    std::cout << "wrote " << engine::write_backtest_csv(report, opt.out_dir) << '\n';
    return 0;
}

int cmd_inspect_outliers(const CLI::App* cmd, const CommonOpts& opt) {
    const EngineConfig cfg = make_config(cmd, opt);
    const auto regions = load_selection(opt);
    if (regions.empty()) {
        std::cerr << "epicast: no regions to inspect\n";
        return 1;
    }

    std::cout << "region,kind,date,original,votes,adjusted,flagged\n";
    for (const auto& region : regions) {
        const int first_weekday = weekday_of(region.start_day);
        struct View {
            const char* name;
            const CountVector* daily;
        };
        const View views[] = {{"cases", &region.daily_cases}, {"deaths", &region.daily_deaths}};
        for (const auto& view : views) {
            const auto report = outliers::clean_series(*view.daily, first_weekday, cfg.outliers);
            for (Eigen::Index i = 0; i < report.votes.size(); ++i) {
                if (report.votes[i] == 0) continue;
                std::cout << region.region_id << ',' << view.name << ','
                          << format_date(region.day_at(i)) << ',' << (*view.daily)[i] << ','
                          << report.votes[i] << ',' << report.adjusted[i] << ','
                          << (report.flags[std::size_t(i)] ? 1 : 0) << '\n';
            }
        }
    }
    return 0;
}

int cmd_dump_posterior(const CLI::App* cmd, const CommonOpts& opt) {
    EngineConfig cfg = make_config(cmd, opt);
    cfg.samples = 1;  // the grids do not depend on the ensemble size
    const auto regions = load_selection(opt);
    if (regions.empty()) {
        std::cerr << "epicast: no regions to dump\n";
        return 1;
    }

    const auto run = engine::run_forecast(regions, cfg);
    std::size_t ok = 0;
    std::cout << "# cases tuning grid\n";
    std::cout << "region,eta,omega,phi,distance,prob\n";
    for (const auto& r : run.regions) {
        if (!r.ok()) {
            std::cerr << "warning: " << r.region_id << ": " << r.error << '\n';
            continue;
        }
        ++ok;
        if (!r.cases.posterior) continue;
        const auto& post = *r.cases.posterior;
        for (std::size_t i = 0; i < post.candidates.size(); ++i) {
            const auto& c = post.candidates[i];
            std::cout << r.region_id << ',' << fmt_prob(c.eta) << ',' << fmt_prob(c.omega) << ','
                      << fmt_prob(c.phi) << ',' << fmt_prob(post.distances[Eigen::Index(i)]) << ','
                      << fmt_prob(post.probs[Eigen::Index(i)]) << '\n';
        }
    }
    std::cout << "# deaths tuning grid\n";
    std::cout << "region,nu,theta_lower,theta_upper,distance,prob\n";
    for (const auto& r : run.regions) {
        if (!r.ok() || !r.deaths.posterior) continue;
        const auto& post = *r.deaths.posterior;
        for (std::size_t i = 0; i < post.candidates.size(); ++i) {
            const auto& c = post.candidates[i];
            std::cout << r.region_id << ',' << c.nu << ',' << fmt_prob(c.theta_lower) << ','
                      << fmt_prob(c.theta_upper) << ',' << fmt_prob(post.distances[Eigen::Index(i)])
                      << ',' << fmt_prob(post.probs[Eigen::Index(i)]) << '\n';
        }
    }
    return ok > 0 ? 0 : 1;
}

}  // namespace

std::vector<RegionSeries> load_dataset(const std::string& data_arg,
                                       const std::string& population_path) {
    const auto populations = ingest::parse_population_csv(ingest::read_file(population_path));
    const auto paths = split_list(data_arg);
    if (paths.size() == 1) {
        return ingest::parse_long_csv(ingest::read_file(paths[0]), populations);
    }
    if (paths.size() == 2) {
        return ingest::parse_wide_csv(ingest::read_file(paths[0]), ingest::read_file(paths[1]),
                                      populations);
    }
    throw std::invalid_argument(
        "--data expects one long-layout path or a cases,deaths pair of paths");
}

std::vector<RegionSeries> filter_regions(std::vector<RegionSeries> all,
                                         const std::string& regions_csv) {
    const auto wanted = split_list(regions_csv);
    if (wanted.empty()) return all;

    std::set<std::string> known;
    for (const auto& r : all) known.insert(r.region_id);
    for (const auto& id : wanted) {
        if (known.count(id) == 0) throw std::invalid_argument("unknown region: " + id);
    }

    const std::set<std::string> keep(wanted.begin(), wanted.end());
    std::vector<RegionSeries> out;
    out.reserve(keep.size());
    for (auto& r : all) {
        if (keep.count(r.region_id) > 0) out.push_back(std::move(r));
    }
    return out;
}

std::vector<Day> parse_origin_list(const std::string& origins_csv) {
    const auto items = split_list(origins_csv);
    if (items.empty()) throw std::invalid_argument("--origins needs at least one date");
    std::vector<Day> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(parse_date(item));
    return out;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"epicast: probabilistic epidemic forecasting"};
    app.require_subcommand(1);
    CommonOpts opt;

    CLI::App* forecast = app.add_subcommand("forecast", "forecast every region K days ahead");
    add_common(forecast, opt);
    forecast->add_option("--out-dir", opt.out_dir, "output directory (default: out)");
    forecast->add_flag("--emit-samples", "also write every sampled path");
    forecast->add_flag("--emit-posterior", "also write the tuning grids");
    forecast->add_flag("--emit-outliers", "also write the outlier verdicts");

    CLI::App* backtest =
        app.add_subcommand("backtest", "score rolling-origin forecasts against held-out truth");
    add_common(backtest, opt);
    backtest->add_option("--out-dir", opt.out_dir, "output directory (default: out)");
    backtest->add_option("--origins", opt.origins, "comma-separated origin dates (ISO)")
        ->required();

    CLI::App* inspect =
        app.add_subcommand("inspect-outliers", "print the outlier votes for every region");
    add_common(inspect, opt);

    CLI::App* dump =
        app.add_subcommand("dump-posterior", "print the fitted tuning grids for every region");
    add_common(dump, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (forecast->parsed()) return cmd_forecast(forecast, opt);
        if (backtest->parsed()) return cmd_backtest(backtest, opt);
        if (inspect->parsed()) return cmd_inspect_outliers(inspect, opt);
        if (dump->parsed()) return cmd_dump_posterior(dump, opt);
    } catch (const std::exception& e) {
        std::cerr << "epicast: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace epicast::cli
