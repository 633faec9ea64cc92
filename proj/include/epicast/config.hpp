#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace epicast {

/// Outlier-detection constants: five detectors vote, three votes flag a day.
struct OutlierConfig {
    int vote_threshold = 3;
    int hampel_window = 15;          // centered window length
    double hampel_k = 3.0;           // multiples of 1.4826 * MAD
    double dow_z_threshold = 3.5;    // |z| on log1p within weekday strata
    double iqr_multiplier = 3.0;     // fences on residuals from a 7-day MA
    double esd_alpha = 0.05;
    double esd_max_fraction = 0.1;
    double student_threshold = 4.0;  // |studentized residual| from trend+DOW fit
    int replacement_week_span = 3;   // same-weekday median over +/- this many weeks
    int replacement_fallback_window = 15;
};

struct EngineConfig {
    int horizon = 28;        // K, forecast days
    int samples = 1000;      // S, ensemble paths
    std::uint64_t seed = 20200417;
    int threads = 0;         // 0 = hardware concurrency

    double attack_rate_min = 0.4;
    double attack_rate_max = 0.7;
    double attack_rate_nominal = 0.55;

    std::vector<double> eta_grid;
    std::vector<double> omega_grid;
    std::vector<double> phi_grid;
    std::vector<int> cfr_window_grid;             // moving-average windows (days)
    std::vector<double> cfr_floor_quantiles;      // train-window quantiles for the floor
    std::vector<double> cfr_ceiling_quantiles;    // and the ceiling

    std::vector<double> quantile_levels;

    OutlierConfig outliers;

    bool emit_samples = false;
    bool emit_posterior = false;
    bool emit_outliers = false;

    static EngineConfig defaults();

    /// Throws std::invalid_argument when any range constraint is violated.
    void validate() const;
};

/// Parse a flat `key = value` config file into `cfg` (unknown keys are an
/// error; comments start with '#'). Values use the same spellings as the
/// CLI flags; list-valued keys take comma-separated entries.
void load_config_file(const std::string& path, EngineConfig& cfg);

/// Apply EPICAST_* environment variable overrides (e.g. EPICAST_SEED).
void apply_env_overrides(EngineConfig& cfg);

/// Set one key (config-file spelling) from a string value. Throws on unknown
/// keys or unparsable values.
void set_config_key(EngineConfig& cfg, const std::string& key, const std::string& value);

}  // namespace epicast
