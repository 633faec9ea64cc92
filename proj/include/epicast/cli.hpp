#pragma once

#include <string>
#include <vector>

#include "epicast/dates.hpp"
#include "epicast/types.hpp"

namespace epicast::cli {

/// Load regions for a run. `data_arg` is either one long-layout CSV path
/// (region,date,cases,deaths with daily counts) or "cases.csv,deaths.csv" —
/// a wide-layout pair of cumulative tables. Populations come from a
/// two-column region,population table.
std::vector<RegionSeries> load_dataset(const std::string& data_arg,
                                       const std::string& population_path);

/// Keep only the comma-separated ids (input order preserved); an empty
/// selection keeps everything. Unknown ids throw.
std::vector<RegionSeries> filter_regions(std::vector<RegionSeries> all,
                                         const std::string& regions_csv);

/// Comma-separated ISO dates; throws when empty or malformed.
std::vector<Day> parse_origin_list(const std::string& origins_csv);

/// The `epicast` command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace epicast::cli
