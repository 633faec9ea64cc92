#pragma once

#include <map>
#include <string>
#include <vector>

#include "epicast/types.hpp"

namespace epicast::ingest {

/// Fields per record for one CSV document (RFC-4180-ish: quoted fields may
/// contain commas, doubled quotes, and newlines; a UTF-8 BOM is tolerated).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// First differences of a cumulative vector, floored at zero. `clamped`
/// collects the indices where a downward revision was absorbed.
struct DailySplit {
    CountVector daily;
    std::vector<Eigen::Index> clamped;
};
DailySplit cumulative_to_daily(const CountVector& cum);

/// Two-column table `region,population`. Throws on duplicates or bad counts.
std::map<std::string, std::int64_t> parse_population_csv(const std::string& text);

/// Long layout: columns region,date,cases,deaths holding daily counts.
/// One RegionSeries per region, sorted by id; dates must be contiguous.
std::vector<RegionSeries> parse_long_csv(
    const std::string& text, const std::map<std::string, std::int64_t>& populations);

/// Wide layout: one row per region; first column the region id, remaining
/// headers ISO dates in ascending contiguous order; cells are cumulative
/// counts. Cases and deaths arrive as a matched pair of documents covering
/// the same regions and dates. Downward revisions clamp (see
/// cumulative_to_daily); stored cumulatives are rebuilt from the clamped
/// dailies so the prefix-sum identity always holds.
std::vector<RegionSeries> parse_wide_csv(
    const std::string& cases_text, const std::string& deaths_text,
    const std::map<std::string, std::int64_t>& populations);

/// Whole file as a string; throws std::runtime_error when unreadable.
std::string read_file(const std::string& path);

}  // namespace epicast::ingest
