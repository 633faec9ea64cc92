#include "epicast/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace epicast::ingest {

namespace {

/// Locate a header (case-insensitive); -1 when absent.
int find_column(const std::vector<std::string>& header, const std::string& name) {
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    const std::string want = lower(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (lower(header[i]) == want) return static_cast<int>(i);
    }
    return -1;
}

std::int64_t parse_count(const std::string& cell, std::size_t row, std::size_t col) {
    const auto fail = [&] {
        throw std::runtime_error("row " + std::to_string(row + 1) + ", column " +
                                 std::to_string(col + 1) + ": expected a count, got '" +
                                 cell + "'");
    };
    if (cell.empty()) fail();
    std::size_t i = cell[0] == '-' ? 1 : 0;
    if (i == cell.size()) fail();
    for (; i < cell.size(); ++i) {
        if (cell[i] < '0' || cell[i] > '9') fail();
    }
    try {
        return std::stoll(cell);
    } catch (const std::exception&) {
        fail();
    }
    return 0;  // unreachable
}

std::int64_t parse_nonneg_count(const std::string& cell, std::size_t row, std::size_t col) {
    const std::int64_t v = parse_count(cell, row, col);
    if (v < 0) {
        throw std::runtime_error("row " + std::to_string(row + 1) + ", column " +
                                 std::to_string(col + 1) + ": negative count " + cell);
    }
    return v;
}

std::string describe_gaps(const std::vector<Day>& sorted_days) {
    std::ostringstream out;
    int listed = 0;
    for (std::size_t i = 1; i < sorted_days.size(); ++i) {
        if (sorted_days[i] == sorted_days[i - 1] + 1) continue;
        if (listed++) out << ", ";
        if (listed > 5) {
            out << "...";
            break;
        }
        out << format_date(sorted_days[i - 1] + 1) << ".." << format_date(sorted_days[i] - 1);
    }
    return out.str();
}

std::int64_t lookup_population(const std::map<std::string, std::int64_t>& populations,
                               const std::string& region) {
    const auto it = populations.find(region);
    if (it == populations.end()) {
        throw std::runtime_error("region '" + region + "' missing from the population table");
    }
    return it->second;
}

/// One parsed wide-layout document: per-region cumulative counts over a
/// shared contiguous date span.
struct WideDoc {
    Day start_day = 0;
    std::map<std::string, CountVector> rows;
};

WideDoc parse_wide_doc(const std::string& text) {
    const auto records = parse_csv(text);
    if (records.empty()) throw std::runtime_error("empty CSV document");
    const auto& header = records[0];
    if (header.size() < 2) {
        throw std::runtime_error("wide layout needs a region column plus date columns");
    }
    std::vector<Day> days;
    days.reserve(header.size() - 1);
    for (std::size_t c = 1; c < header.size(); ++c) {
        Day d;
        try {
            d = parse_date(header[c]);
        } catch (const std::exception&) {
            throw std::runtime_error("column " + std::to_string(c + 1) +
                                     ": header '" + header[c] + "' is not an ISO date");
        }
        if (!days.empty() && d != days.back() + 1) {
            throw std::runtime_error("date columns must ascend one day at a time; '" +
                                     header[c] + "' follows '" + header[c - 1] + "'");
        }
        days.push_back(d);
    }

    WideDoc doc;
    doc.start_day = days.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        if (row.size() != header.size()) {
            throw std::runtime_error("row " + std::to_string(r + 1) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " +
                                     std::to_string(row.size()));
        }
        const std::string& region = row[0];
        if (region.empty()) {
            throw std::runtime_error("row " + std::to_string(r + 1) + ": empty region id");
        }
        if (doc.rows.count(region)) {
            throw std::runtime_error("region '" + region + "' appears twice");
        }
        CountVector cum(static_cast<Eigen::Index>(days.size()));
        for (std::size_t c = 1; c < row.size(); ++c) {
            cum[static_cast<Eigen::Index>(c - 1)] = parse_nonneg_count(row[c], r, c);
        }
        doc.rows.emplace(region, std::move(cum));
    }
    if (doc.rows.empty()) throw std::runtime_error("wide document has no data rows");
    return doc;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    std::size_t i = 0;
    // Skip a UTF-8 byte-order mark.
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

    const auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    const auto end_row = [&] {
        end_field();
        // A line with nothing on it is a blank separator, not a record.
        if (row.size() > 1 || !row[0].empty()) records.push_back(std::move(row));
        row.clear();
    };

    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) throw std::runtime_error("unterminated quoted field");
    if (!field.empty() && field.back() == '\r') field.pop_back();
    if (field_started || !field.empty() || !row.empty()) end_row();
    return records;
}

DailySplit cumulative_to_daily(const CountVector& cum) {
    if (cum.size() == 0) throw std::runtime_error("empty cumulative vector");
    DailySplit out;
    out.daily.resize(cum.size());
    out.daily[0] = cum[0];
    for (Eigen::Index i = 1; i < cum.size(); ++i) {
        const std::int64_t diff = cum[i] - cum[i - 1];
        if (diff < 0) {
            out.daily[i] = 0;
            out.clamped.push_back(i);
        } else {
            out.daily[i] = diff;
        }
    }
    return out;
}

std::map<std::string, std::int64_t> parse_population_csv(const std::string& text) {
    const auto records = parse_csv(text);
    if (records.empty()) throw std::runtime_error("empty population table");
    const auto& header = records[0];
    const int rcol = find_column(header, "region");
    const int pcol = find_column(header, "population");
    if (rcol < 0 || pcol < 0) {
        throw std::runtime_error("population table needs 'region' and 'population' columns");
    }
    std::map<std::string, std::int64_t> table;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        if (row.size() <= std::size_t(std::max(rcol, pcol))) {
            throw std::runtime_error("population table row " + std::to_string(r + 1) +
                                     ": too few fields");
        }
        const std::string& region = row[rcol];
        const std::int64_t pop = parse_count(row[pcol], r, pcol);
        if (pop < 1) {
            throw std::runtime_error("region '" + region + "': population must be >= 1");
        }
        if (!table.emplace(region, pop).second) {
            throw std::runtime_error("region '" + region + "' appears twice in population table");
        }
    }
    if (table.empty()) throw std::runtime_error("population table has no data rows");
    return table;
}

std::vector<RegionSeries> parse_long_csv(
    const std::string& text, const std::map<std::string, std::int64_t>& populations) {
    const auto records = parse_csv(text);
    if (records.empty()) throw std::runtime_error("empty CSV document");
    const auto& header = records[0];
    const int rcol = find_column(header, "region");
    const int dcol = find_column(header, "date");
    const int ccol = find_column(header, "cases");
    const int kcol = find_column(header, "deaths");
    if (rcol < 0 || dcol < 0 || ccol < 0 || kcol < 0) {
        throw std::runtime_error("long layout needs region,date,cases,deaths columns");
    }

    struct Obs {
        Day day;
        std::int64_t cases;
        std::int64_t deaths;
    };
    std::map<std::string, std::vector<Obs>> by_region;
    const std::size_t width =
        std::size_t(std::max(std::max(rcol, dcol), std::max(ccol, kcol))) + 1;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        if (row.size() < width) {
            throw std::runtime_error("row " + std::to_string(r + 1) + ": too few fields");
        }
        Obs obs;
        try {
            obs.day = parse_date(row[dcol]);
        } catch (const std::exception&) {
            throw std::runtime_error("row " + std::to_string(r + 1) + ", column " +
                                     std::to_string(dcol + 1) + ": bad date '" + row[dcol] + "'");
        }
        obs.cases = parse_nonneg_count(row[ccol], r, ccol);
        obs.deaths = parse_nonneg_count(row[kcol], r, kcol);
        if (row[rcol].empty()) {
            throw std::runtime_error("row " + std::to_string(r + 1) + ": empty region id");
        }
        by_region[row[rcol]].push_back(obs);
    }
    if (by_region.empty()) throw std::runtime_error("no data rows");

    std::vector<RegionSeries> out;
    out.reserve(by_region.size());
    for (auto& [region, obs] : by_region) {
        std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.day < b.day; });
        std::vector<Day> days;
        days.reserve(obs.size());
        for (const auto& o : obs) {
            if (!days.empty() && o.day == days.back()) {
                throw std::runtime_error("region '" + region + "': duplicate date " +
                                         format_date(o.day));
            }
            days.push_back(o.day);
        }
        if (days.back() - days.front() + 1 != static_cast<Day>(days.size())) {
            throw std::runtime_error("region '" + region + "': missing dates (" +
                                     describe_gaps(days) + ")");
        }
        RegionSeries rs;
        rs.region_id = region;
        rs.start_day = days.front();
        rs.population = lookup_population(populations, region);
        rs.daily_cases.resize(static_cast<Eigen::Index>(obs.size()));
        rs.daily_deaths.resize(static_cast<Eigen::Index>(obs.size()));
        for (std::size_t i = 0; i < obs.size(); ++i) {
            rs.daily_cases[static_cast<Eigen::Index>(i)] = obs[i].cases;
            rs.daily_deaths[static_cast<Eigen::Index>(i)] = obs[i].deaths;
        }
        rs.cum_cases = daily_to_cumulative(rs.daily_cases);
        rs.cum_deaths = daily_to_cumulative(rs.daily_deaths);
        rs.validate();
        out.push_back(std::move(rs));
    }
    return out;
}

std::vector<RegionSeries> parse_wide_csv(
    const std::string& cases_text, const std::string& deaths_text,
    const std::map<std::string, std::int64_t>& populations) {
    const WideDoc cases = parse_wide_doc(cases_text);
    const WideDoc deaths = parse_wide_doc(deaths_text);
    if (cases.start_day != deaths.start_day ||
        cases.rows.begin()->second.size() != deaths.rows.begin()->second.size()) {
        throw std::runtime_error("cases and deaths documents cover different date spans");
    }
    for (const auto& [region, _] : cases.rows) {
        if (!deaths.rows.count(region)) {
            throw std::runtime_error("region '" + region + "' has cases but no deaths row");
        }
    }
    for (const auto& [region, _] : deaths.rows) {
        if (!cases.rows.count(region)) {
            throw std::runtime_error("region '" + region + "' has deaths but no cases row");
        }
    }

    std::vector<RegionSeries> out;
    out.reserve(cases.rows.size());
    for (const auto& [region, cum_cases_raw] : cases.rows) {
        RegionSeries rs;
        rs.region_id = region;
        rs.start_day = cases.start_day;
        rs.population = lookup_population(populations, region);

        DailySplit c = cumulative_to_daily(cum_cases_raw);
        DailySplit d = cumulative_to_daily(deaths.rows.at(region));
        rs.daily_cases = std::move(c.daily);
        rs.clamped_cases = std::move(c.clamped);
        rs.daily_deaths = std::move(d.daily);
        rs.clamped_deaths = std::move(d.clamped);
        // Rebuild cumulatives from the clamped dailies so the prefix-sum
        // identity holds even after downward revisions.
        rs.cum_cases = daily_to_cumulative(rs.daily_cases);
        rs.cum_deaths = daily_to_cumulative(rs.daily_deaths);
        rs.validate();
        out.push_back(std::move(rs));
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace epicast::ingest
