#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>

#include "epicast/ingest.hpp"

using namespace epicast;

namespace {

const std::map<std::string, std::int64_t> kPops{{"r1", 1000}, {"r2", 5000}, {"r3", 700}};

}  // namespace

TEST_CASE("csv tokenizer handles quoting, CRLF, blank lines, and a BOM") {
    const std::string text =
        "\xEF\xBB\xBF"
        "a,b,c\r\n"
        "1,\"two, with comma\",3\n"
        "\n"
        "\"he said \"\"hi\"\"\",\"multi\nline\",\n";
    const auto rows = ingest::parse_csv(text);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1] == std::vector<std::string>{"1", "two, with comma", "3"});
    CHECK(rows[2] == std::vector<std::string>{"he said \"hi\"", "multi\nline", ""});
    CHECK_THROWS(ingest::parse_csv("a,\"unterminated\n"));
    // no trailing newline
    CHECK(ingest::parse_csv("x,y") == std::vector<std::vector<std::string>>{{"x", "y"}});
}

TEST_CASE("cumulative_to_daily differences and clamps") {
    CountVector cum(3);
    cum << 1, 3, 6;
    auto split = ingest::cumulative_to_daily(cum);
    CHECK(split.daily(0) == 1);
    CHECK(split.daily(1) == 2);
    CHECK(split.daily(2) == 3);
    CHECK(split.clamped.empty());

    cum << 0, 0, 0;
    split = ingest::cumulative_to_daily(cum);
    CHECK(split.daily.isZero());
    CHECK(split.clamped.empty());

    cum << 10, 7, 12;
    split = ingest::cumulative_to_daily(cum);
    CHECK(split.daily(0) == 10);
    CHECK(split.daily(1) == 0);
    CHECK(split.daily(2) == 5);
    REQUIRE(split.clamped.size() == 1);
    CHECK(split.clamped[0] == 1);
}

TEST_CASE("cumulative/daily round-trip on non-decreasing input") {
    CountVector cum(6);
    cum << 0, 2, 2, 7, 7, 30;
    const auto split = ingest::cumulative_to_daily(cum);
    CHECK(split.clamped.empty());
    CHECK(daily_to_cumulative(split.daily) == cum);
}

TEST_CASE("population table parses and rejects duplicates") {
    const auto table = ingest::parse_population_csv(
        "region,population\nr1,1000\nr2,5000\n");
    CHECK(table.at("r1") == 1000);
    CHECK(table.at("r2") == 5000);
    CHECK_THROWS(ingest::parse_population_csv("region,population\nr1,10\nr1,20\n"));
    CHECK_THROWS(ingest::parse_population_csv("region,population\nr1,0\n"));
    CHECK_THROWS(ingest::parse_population_csv("region,population\nr1,many\n"));
    CHECK_THROWS(ingest::parse_population_csv("name,people\nr1,10\n"));
}

TEST_CASE("long layout builds prefix sums") {
    const std::string csv =
        "region,date,cases,deaths\n"
        "r1,2020-03-01,1,0\n"
        "r1,2020-03-02,2,0\n"
        "r1,2020-03-03,3,1\n";
    const auto regions = ingest::parse_long_csv(csv, kPops);
    REQUIRE(regions.size() == 1);
    const auto& rs = regions[0];
    CHECK(rs.region_id == "r1");
    CHECK(rs.population == 1000);
    CHECK(format_date(rs.start_day) == "2020-03-01");
    CHECK(rs.cum_cases(0) == 1);
    CHECK(rs.cum_cases(1) == 3);
    CHECK(rs.cum_cases(2) == 6);
    CHECK(rs.cum_deaths(2) == 1);
}

TEST_CASE("long layout is order-independent over rows") {
    const std::string sorted_rows =
        "region,date,cases,deaths\n"
        "r1,2020-03-01,1,0\nr1,2020-03-02,2,0\nr2,2020-03-01,7,1\nr2,2020-03-02,8,2\n";
    const std::string shuffled =
        "region,date,cases,deaths\n"
        "r2,2020-03-02,8,2\nr1,2020-03-02,2,0\nr2,2020-03-01,7,1\nr1,2020-03-01,1,0\n";
    const auto a = ingest::parse_long_csv(sorted_rows, kPops);
    const auto b = ingest::parse_long_csv(shuffled, kPops);
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].region_id == b[i].region_id);
        CHECK(a[i].daily_cases == b[i].daily_cases);
        CHECK(a[i].daily_deaths == b[i].daily_deaths);
        CHECK(a[i].start_day == b[i].start_day);
    }
}

TEST_CASE("long layout error cases") {
    // missing interior date, with the gap named
    const std::string gappy =
        "region,date,cases,deaths\n"
        "r1,2020-03-01,1,0\nr1,2020-03-04,2,0\n";
    CHECK_THROWS_WITH_AS(ingest::parse_long_csv(gappy, kPops),
                         doctest::Contains("2020-03-02..2020-03-03"), std::runtime_error);
    // unknown region
    const std::string unknown =
        "region,date,cases,deaths\nzz,2020-03-01,1,0\n";
    CHECK_THROWS_WITH_AS(ingest::parse_long_csv(unknown, kPops),
                         doctest::Contains("population"), std::runtime_error);
    // malformed number names the spot
    const std::string bad_num =
        "region,date,cases,deaths\nr1,2020-03-01,one,0\n";
    CHECK_THROWS_WITH_AS(ingest::parse_long_csv(bad_num, kPops), doctest::Contains("row 2"),
                         std::runtime_error);
    // negative daily count is a hard error in the long layout
    const std::string negative =
        "region,date,cases,deaths\nr1,2020-03-01,-3,0\n";
    CHECK_THROWS(ingest::parse_long_csv(negative, kPops));
    // duplicate date
    const std::string dup =
        "region,date,cases,deaths\nr1,2020-03-01,1,0\nr1,2020-03-01,2,0\n";
    CHECK_THROWS(ingest::parse_long_csv(dup, kPops));
    // bad date
    const std::string bad_date =
        "region,date,cases,deaths\nr1,2020-13-01,1,0\n";
    CHECK_THROWS(ingest::parse_long_csv(bad_date, kPops));
    // missing required column
    CHECK_THROWS(ingest::parse_long_csv("region,date,cases\nr1,2020-03-01,1\n", kPops));
}

TEST_CASE("wide layout differences cumulatives and clamps revisions") {
    const std::string cases =
        "region,2020-03-01,2020-03-02,2020-03-03\n"
        "r1,5,5,8\n"
        "r2,10,7,12\n";
    const std::string deaths =
        "region,2020-03-01,2020-03-02,2020-03-03\n"
        "r1,0,1,1\n"
        "r2,0,0,2\n";
    const auto regions = ingest::parse_wide_csv(cases, deaths, kPops);
    REQUIRE(regions.size() == 2);

    const auto& r1 = regions[0];
    CHECK(r1.region_id == "r1");
    CHECK(r1.daily_cases(0) == 5);
    CHECK(r1.daily_cases(1) == 0);
    CHECK(r1.daily_cases(2) == 3);
    CHECK(r1.clamped_cases.empty());
    CHECK(r1.daily_deaths(1) == 1);

    // r2 had a downward revision on day 2: clamped, and the stored
    // cumulative is rebuilt from the clamped dailies.
    const auto& r2 = regions[1];
    CHECK(r2.daily_cases(0) == 10);
    CHECK(r2.daily_cases(1) == 0);
    CHECK(r2.daily_cases(2) == 5);
    REQUIRE(r2.clamped_cases.size() == 1);
    CHECK(r2.clamped_cases[0] == 1);
    CHECK(r2.cum_cases(2) == 15);
    CHECK_NOTHROW(r2.validate());
}

TEST_CASE("wide layout error cases") {
    const std::string ok = "region,2020-03-01,2020-03-02\nr1,1,2\n";
    // non-contiguous date columns
    CHECK_THROWS(ingest::parse_wide_csv("region,2020-03-01,2020-03-03\nr1,1,2\n", ok, kPops));
    // non-date header
    CHECK_THROWS(ingest::parse_wide_csv("region,foo,2020-03-02\nr1,1,2\n", ok, kPops));
    // duplicate region row
    CHECK_THROWS(
        ingest::parse_wide_csv("region,2020-03-01,2020-03-02\nr1,1,2\nr1,3,4\n", ok, kPops));
    // region present in cases but not deaths
    CHECK_THROWS(ingest::parse_wide_csv("region,2020-03-01,2020-03-02\nr1,1,2\nr2,0,0\n", ok,
                                        kPops));
    // mismatched date spans
    CHECK_THROWS(
        ingest::parse_wide_csv("region,2020-03-01,2020-03-02,2020-03-03\nr1,1,2,3\n", ok, kPops));
    // ragged row
    CHECK_THROWS(ingest::parse_wide_csv("region,2020-03-01,2020-03-02\nr1,1\n", ok, kPops));
}
