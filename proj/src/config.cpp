#include "epicast/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace epicast {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': cannot parse number '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': cannot parse integer '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config key '" + key + "': cannot parse bool '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) out.push_back(static_cast<int>(parse_int(key, item)));
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

}  // namespace

EngineConfig EngineConfig::defaults() {
    EngineConfig cfg;
    cfg.eta_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    cfg.omega_grid = {1, 2, 3, 5, 7, 10, 14, 21, 28};
    cfg.phi_grid = {0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.4, 1.6};
    cfg.cfr_window_grid = {7, 14, 21, 28, 35};
    cfg.cfr_floor_quantiles = {0.05, 0.10, 0.25};
    cfg.cfr_ceiling_quantiles = {0.75, 0.90, 0.95};
    cfg.quantile_levels = {0.01, 0.025, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30,
                           0.35, 0.40,  0.45, 0.50, 0.55, 0.60, 0.65, 0.70,
                           0.75, 0.80,  0.85, 0.90, 0.95, 0.975, 0.99};
    return cfg;
}

void EngineConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    if (threads < 0) throw std::invalid_argument("threads must be >= 0");
    if (!(0.0 < attack_rate_min && attack_rate_min < attack_rate_nominal &&
          attack_rate_nominal < attack_rate_max && attack_rate_max < 1.0)) {
        throw std::invalid_argument(
            "attack rates must satisfy 0 < min < nominal < max < 1");
    }
    if (quantile_levels.empty()) throw std::invalid_argument("quantile_levels must be non-empty");
    double prev = 0.0;
    for (double q : quantile_levels) {
        if (!(q > prev && q < 1.0)) {
            throw std::invalid_argument("quantile_levels must be strictly increasing in (0,1)");
        }
        prev = q;
    }
    if (eta_grid.empty() || omega_grid.empty() || phi_grid.empty()) {
        throw std::invalid_argument("tuning grids must be non-empty");
    }
    for (double eta : eta_grid) {
        if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta grid outside [0,1]");
    }
    for (double omega : omega_grid) {
        if (!(omega >= 1.0)) throw std::invalid_argument("omega grid must be >= 1");
    }
    for (double phi : phi_grid) {
        if (!(phi > 0.0)) throw std::invalid_argument("phi grid must be > 0");
    }
    if (cfr_window_grid.empty()) throw std::invalid_argument("cfr_window_grid must be non-empty");
    for (int nu : cfr_window_grid) {
        if (nu < 1) throw std::invalid_argument("cfr windows must be >= 1");
    }
    if (cfr_floor_quantiles.empty() || cfr_ceiling_quantiles.empty()) {
        throw std::invalid_argument("cfr quantile lists must be non-empty");
    }
    if (outliers.vote_threshold < 1 || outliers.vote_threshold > 5) {
        throw std::invalid_argument("outlier vote_threshold must be in [1,5]");
    }
}

void set_config_key(EngineConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "horizon") {
        cfg.horizon = static_cast<int>(parse_int(key, value));
    } else if (key == "samples") {
        cfg.samples = static_cast<int>(parse_int(key, value));
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "attack_rate_min") {
        cfg.attack_rate_min = parse_double(key, value);
    } else if (key == "attack_rate_max") {
        cfg.attack_rate_max = parse_double(key, value);
    } else if (key == "attack_rate_nominal") {
        cfg.attack_rate_nominal = parse_double(key, value);
    } else if (key == "eta_grid") {
        cfg.eta_grid = parse_double_list(key, value);
    } else if (key == "omega_grid") {
        cfg.omega_grid = parse_double_list(key, value);
    } else if (key == "phi_grid") {
        cfg.phi_grid = parse_double_list(key, value);
    } else if (key == "cfr_window_grid") {
        cfg.cfr_window_grid = parse_int_list(key, value);
    } else if (key == "cfr_floor_quantiles") {
        cfg.cfr_floor_quantiles = parse_double_list(key, value);
    } else if (key == "cfr_ceiling_quantiles") {
        cfg.cfr_ceiling_quantiles = parse_double_list(key, value);
    } else if (key == "quantile_levels") {
        cfg.quantile_levels = parse_double_list(key, value);
    } else if (key == "outlier_vote_threshold") {
        cfg.outliers.vote_threshold = static_cast<int>(parse_int(key, value));
    } else if (key == "outlier_hampel_window") {
        cfg.outliers.hampel_window = static_cast<int>(parse_int(key, value));
    } else if (key == "outlier_hampel_k") {
        cfg.outliers.hampel_k = parse_double(key, value);
    } else if (key == "outlier_dow_z_threshold") {
        cfg.outliers.dow_z_threshold = parse_double(key, value);
    } else if (key == "outlier_iqr_multiplier") {
        cfg.outliers.iqr_multiplier = parse_double(key, value);
    } else if (key == "outlier_esd_alpha") {
        cfg.outliers.esd_alpha = parse_double(key, value);
    } else if (key == "outlier_esd_max_fraction") {
        cfg.outliers.esd_max_fraction = parse_double(key, value);
    } else if (key == "outlier_student_threshold") {
        cfg.outliers.student_threshold = parse_double(key, value);
    } else if (key == "outlier_replacement_week_span") {
        cfg.outliers.replacement_week_span = static_cast<int>(parse_int(key, value));
    } else if (key == "outlier_replacement_fallback_window") {
        cfg.outliers.replacement_fallback_window = static_cast<int>(parse_int(key, value));
    } else if (key == "emit_samples") {
        cfg.emit_samples = parse_bool(key, value);
    } else if (key == "emit_posterior") {
        cfg.emit_posterior = parse_bool(key, value);
    } else if (key == "emit_outliers") {
        cfg.emit_outliers = parse_bool(key, value);
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

void load_config_file(const std::string& path, EngineConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            set_config_key(cfg, key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_env_overrides(EngineConfig& cfg) {
    static const char* keys[] = {"horizon", "samples", "seed", "threads",
                                 "attack_rate_min", "attack_rate_max", "attack_rate_nominal",
                                 "eta_grid", "omega_grid", "phi_grid",
                                 "cfr_window_grid", "cfr_floor_quantiles",
                                 "cfr_ceiling_quantiles", "quantile_levels",
                                 "emit_samples", "emit_posterior", "emit_outliers"};
    for (const char* key : keys) {
        std::string env_name = "EPICAST_";
        for (const char* p = key; *p; ++p) {
            env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
        }
        if (const char* v = std::getenv(env_name.c_str())) {
            set_config_key(cfg, key, v);
        }
    }
}

}  // namespace epicast
