#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epicast/config.hpp"
#include "epicast/dates.hpp"
#include "epicast/deaths.hpp"
#include "epicast/outliers.hpp"
#include "epicast/simulate.hpp"
#include "epicast/types.hpp"

namespace epicast::engine {

/// Everything produced for one region: outlier verdicts, the adjusted
/// series, and both forecasts. `error` carries the failure message when the
/// pipeline could not run to completion; the other fields are then unset.
struct RegionResult {
    std::string region_id;
    std::string error;
    RegionSeries observed;  // input as given, before outlier adjustment
    outliers::OutlierReport case_outliers;
    outliers::OutlierReport death_outliers;
    RegionSeries adjusted;
    simulate::CaseForecast cases;
    deaths::DeathForecast deaths;

    bool ok() const { return error.empty(); }
};

struct ForecastRun {
    std::vector<RegionResult> regions;
    EngineConfig config;
};

/// Run the per-region pipeline (outlier adjustment, case forecast, death
/// forecast) over every input region, in input order. Regions run in
/// parallel on `config.threads` workers (hardware concurrency when zero);
/// results do not depend on the worker count. A region's failure is
/// recorded in its result without disturbing the other regions.
ForecastRun run_forecast(const std::vector<RegionSeries>& input, const EngineConfig& config);

/// Type-7 empirical quantiles of an ensemble: one row per target day, one
/// column per requested level. Throws when the ensemble holds no samples.
Matrix ensemble_quantiles(const ForecastEnsemble& ensemble, const std::vector<double>& levels);

/// Emit quantiles.csv, summary.csv, and plotdata.json — plus samples.csv,
/// posterior.csv / deaths_posterior.csv, and outliers.csv when the config
/// asks for them — into `out_dir` (created if missing). Returns the paths
/// written. Output bytes are a pure function of the run.
std::vector<std::string> write_outputs(const ForecastRun& run, const std::string& out_dir);

/// One scored forecast day of a rolling-origin backtest.
struct BacktestRow {
    std::string region_id;
    Day origin = 0;  // last day of history visible to the forecast
    SeriesKind kind = SeriesKind::cases;
    int k = 0;  // horizon day, 1-based
    std::int64_t truth = 0;
    double median = 0.0;
    double lo50 = 0.0, hi50 = 0.0;  // central 50% interval
    double lo80 = 0.0, hi80 = 0.0;  // central 80% interval
    bool in50 = false, in80 = false;
};

struct BacktestReport {
    std::vector<BacktestRow> rows;
    std::vector<std::string> skipped;  // one warning per unusable (region, origin)
    double coverage50 = 0.0;  // pooled over all rows
    double coverage80 = 0.0;
    double mae_of_median = 0.0;  // mean absolute error of the median forecast
};

/// Re-forecast from each origin using only history up to and including it,
/// then score the next K days against what the series actually recorded
/// (the raw counts, before outlier adjustment). Origins that do not leave
/// 42 days of history or K days of later truth are skipped with a warning,
/// as are regions whose truncated pipeline fails. Each (region, origin)
/// forecast runs under a seed derived from the configured seed and the
/// origin date, so adding origins never reshuffles existing ones.
BacktestReport run_backtest(const std::vector<RegionSeries>& input,
                            const std::vector<Day>& origins, const EngineConfig& config);

/// Emit backtest.csv into `out_dir`; returns the path written.
std::string write_backtest_csv(const BacktestReport& report, const std::string& out_dir);

}  // namespace epicast::engine
