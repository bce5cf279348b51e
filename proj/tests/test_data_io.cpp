#include "oracles.hpp"

#include "mortlaw/dataset.hpp"
#include "mortlaw/error.hpp"
#include "mortlaw/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace mortlaw;

namespace {

std::string fixture(const std::string &name) {
    const char *dir = std::getenv("MORTLAW_FIXTURES");
    return std::string{dir ? dir : "tests/fixtures"} + "/" + name;
}

std::string constant_csv(int from = 70, int to = 110) {
    std::string text = "age,deaths,exposure\n";
    for (int age = from; age <= to; ++age) {
        text += std::to_string(age) + ",10,1000\n";
    }
    return text;
}

ParsedCsv parse(const std::string &text, int truncation = 70) {
    std::istringstream in{text};
    return parse_csv(in, truncation);
}

std::size_t parse_error_line(const std::string &text) {
    try {
        parse(text);
    } catch (const ParseError &e) {
        return e.line();
    }
    FAIL("no ParseError for:\n" << text);
    return 0;
}

// Minimal HMD table with the given data rows (already formatted).
std::string hmd(const std::string &body, const std::string &header = "Year Age Female Male Total") {
    return "Somewhere, Deaths (period 1x1)\n\n  " + header + "\n" + body;
}

HmdSelection select(int year, Sex sex = Sex::Total) {
    HmdSelection selection;
    selection.year = year;
    selection.sex = sex;
    return selection;
}

MortalityDataset parse_fixture(int year, Sex sex = Sex::Total) {
    return parse_hmd_files(fixture("hmd_deaths.txt"), fixture("hmd_exposures.txt"),
                           {year, sex, 70, std::nullopt});
}

} // namespace

TEST_CASE("CSV with ages 70 to 110") {
    const auto parsed = parse(constant_csv());
    CHECK(parsed.dataset.size() == 41);
    CHECK(parsed.dropped_rows == 0);
    for (std::size_t k = 0; k < 41; ++k) {
        CHECK(parsed.dataset[k].age_index == static_cast<int>(k));
        CHECK(parsed.dataset[k].deaths == 10.0);
        CHECK(parsed.dataset[k].exposure == 1000.0);
    }
    CHECK(parsed.dataset.max_age() == 110);
}

TEST_CASE("CSV errors name the offending line") {
    SUBCASE("duplicate age") {
        std::string text = constant_csv(70, 90);
        text += "80,1,100\n";
        CHECK(parse_error_line(text) == 23);
    }
    SUBCASE("gap in ages") {
        CHECK(parse_error_line("age,deaths,exposure\n70,1,10\n71,1,10\n73,1,10\n") == 4);
    }
    SUBCASE("non-numeric fields") {
        CHECK(parse_error_line("age,deaths,exposure\n70,1,10\n71,x,10\n") == 3);
        CHECK(parse_error_line("age,deaths,exposure\n70.5,1,10\n") == 2);
        CHECK(parse_error_line("age,deaths,exposure\n70,1,10,4\n") == 2);
    }
    SUBCASE("non-positive exposure and negative deaths") {
        CHECK(parse_error_line("age,deaths,exposure\n70,1,10\n71,1,0\n") == 3);
        CHECK(parse_error_line("age,deaths,exposure\n70,1,-5\n") == 2);
        CHECK(parse_error_line("age,deaths,exposure\n70,-1,5\n") == 2);
    }
    SUBCASE("missing header") {
        CHECK(parse_error_line("70,1,10\n71,1,10\n") == 1);
        CHECK_THROWS_AS(parse(""), ParseError);
    }
    SUBCASE("too few rows is still a parse error") {
        CHECK_THROWS_AS(parse(constant_csv(70, 73)), ParseError);
    }
}

TEST_CASE("CSV drops and counts rows below the truncation age") {
    const auto parsed = parse(constant_csv(60, 110));
    CHECK(parsed.dropped_rows == 10);
    CHECK(parsed.dataset.size() == 41);
}

TEST_CASE("CSV round trip is idempotent") {
    std::string text = "age,deaths,exposure\n";
    for (int age = 70; age <= 80; ++age) {
        text += std::to_string(age) + "," + format_roundtrip(0.1 * age + 1e-9) + "," +
                format_roundtrip(1234.5678 / age) + "\n";
    }
    const auto first = parse(text);
    std::ostringstream written;
    write_csv(first.dataset, written);
    CHECK(written.str() == text);
    CHECK(parse(written.str()).dataset == first.dataset);

    // Row order, CRLF endings and a BOM do not change the result.
    std::string shuffled = "\xEF\xBB\xBF" "age,deaths,exposure\r\n";
    for (int age = 80; age >= 70; --age) {
        shuffled += std::to_string(age) + "," + format_roundtrip(0.1 * age + 1e-9) + "," +
                    format_roundtrip(1234.5678 / age) + "\r\n";
    }
    CHECK(parse(shuffled).dataset == first.dataset);
}

TEST_CASE("shortest round-trip formatting") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, 2.5}) {
        CHECK(std::stod(format_roundtrip(v)) == v);
    }
    CHECK(format_roundtrip(2.5) == "2.5");
    CHECK(format_roundtrip(1000.0) == "1000");
}

TEST_CASE("HMD fixture with two years") {
    const auto y2014 = parse_fixture(2014);
    const auto y2015 = parse_fixture(2015);
    CHECK(y2014.size() == 41);
    CHECK(y2015.size() == 41);
    CHECK(y2014.label() == "Testland 2014 total");
    // Exact values as printed, including the open 110+ row as age 110.
    CHECK(y2014[0].deaths == 1173.30);
    CHECK(y2014[0].exposure == 65877.39);
    CHECK(y2014[40].deaths == 4795.56);
    CHECK(y2014[40].exposure == 5994.45);
    CHECK(y2015[40].exposure == 6054.40);
    for (std::size_t k = 0; k < 41; ++k) {
        CHECK(y2014[k].deaths != y2015[k].deaths);
    }
    const auto female = parse_fixture(2015, Sex::Female);
    const auto male = parse_fixture(2015, Sex::Male);
    CHECK(female[0].deaths != male[0].deaths);
}

TEST_CASE("HMD selection and layout") {
    SUBCASE("missing values outside the window are ignored") {
        // The fixture has '.' at age 5 for 2014 females and totals.
        CHECK_NOTHROW(parse_fixture(2014, Sex::Female));
        CHECK_THROWS_AS(parse_hmd_files(fixture("hmd_deaths.txt"), fixture("hmd_exposures.txt"),
                                        {2014, Sex::Female, 0, 30}),
                        ParseError);
    }
    SUBCASE("max age drops the tail") {
        const auto data = parse_hmd_files(fixture("hmd_deaths.txt"), fixture("hmd_exposures.txt"),
                                          {2015, Sex::Total, 70, 100});
        CHECK(data.size() == 31);
        CHECK(data.max_age() == 100);
    }
    SUBCASE("absent year") {
        try {
            parse_fixture(1999);
            FAIL("expected an error");
        } catch (const ParseError &e) {
            CHECK(std::string{e.what()}.find("1999") != std::string::npos);
        }
    }
    SUBCASE("absent sex column") {
        std::string body;
        for (int age = 70; age <= 80; ++age) {
            body += "2000 " + std::to_string(age) + " 1.0 2.0\n";
        }
        std::istringstream d{hmd(body, "Year Age Female Male")};
        std::istringstream e{hmd(body, "Year Age Female Male")};
        CHECK_THROWS_AS(parse_hmd(d, e, select(2000, Sex::Total)), ParseError);
    }
    SUBCASE("age mismatch between the files") {
        std::string deaths_body, exposure_body;
        for (int age = 70; age <= 80; ++age) {
            deaths_body += "2000 " + std::to_string(age) + " 1 2 3\n";
            if (age != 75) {
                exposure_body += "2000 " + std::to_string(age) + " 10 20 30\n";
            }
        }
        std::istringstream d{hmd(deaths_body)};
        std::istringstream e{hmd(exposure_body)};
        CHECK_THROWS_AS(parse_hmd(d, e, select(2000, Sex::Total)), ParseError);
    }
    SUBCASE("missing value inside the window") {
        std::string body;
        for (int age = 70; age <= 80; ++age) {
            body += "2000 " + std::to_string(age) + (age == 77 ? " . 2 3\n" : " 1 2 3\n");
        }
        std::istringstream d{hmd(body)};
        std::istringstream e{hmd(body)};
        CHECK_NOTHROW(parse_hmd(d, e, select(2000, Sex::Total)));
        std::istringstream d2{hmd(body)};
        std::istringstream e2{hmd(body)};
        CHECK_THROWS_AS(parse_hmd(d2, e2, select(2000, Sex::Female)), ParseError);
    }
    SUBCASE("malformed rows name their line") {
        std::istringstream d{hmd("2000 70 1 2\n")};
        std::istringstream e{hmd("2000 70 1 2 3\n")};
        try {
            parse_hmd(d, e, select(2000, Sex::Total));
            FAIL("expected an error");
        } catch (const ParseError &err) {
            CHECK(err.line() == 4);
        }
    }
    SUBCASE("CRLF and irregular whitespace") {
        std::string body;
        for (int age = 70; age <= 110; ++age) {
            body += "\t2000   " + (age == 110 ? std::string{"110+"} : std::to_string(age)) +
                    "  1.25\t2.5   3.75  \r\n";
        }
        std::istringstream d{hmd(body)};
        std::istringstream e{hmd(body)};
        const auto data = parse_hmd(d, e, select(2000, Sex::Male));
        CHECK(data.size() == 41);
        CHECK(data[40].deaths == 2.5);
    }
    SUBCASE("sex names") {
        CHECK(sex_from_string("Female") == Sex::Female);
        CHECK(sex_from_string("TOTAL") == Sex::Total);
        CHECK_THROWS_AS(sex_from_string("both"), ConfigError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(parse_hmd_files("/nonexistent/d.txt", "/nonexistent/e.txt", select(2000)),
                        ParseError);
    }
}

TEST_CASE("truncation") {
    const auto data = parse(constant_csv()).dataset;
    CHECK(truncate_and_reindex(data, 70) == data);
    const auto later = truncate_and_reindex(data, 80);
    CHECK(later.size() == 31);
    CHECK(later.truncation_age() == 80);
    CHECK(later[0].age_index == 0);
    CHECK(later.max_age() == 110);
    CHECK_THROWS_AS(truncate_and_reindex(data, 60), DataError);
    CHECK_THROWS_AS(truncate_and_reindex(data, 108), DataError);
}

TEST_CASE("dataset invariants") {
    std::vector<DatasetRow> rows;
    for (int k = 0; k < 8; ++k) {
        rows.push_back({7 - k, 1.0, 10.0});
    }
    const MortalityDataset sorted{rows};
    CHECK(sorted[0].age_index == 0);
    rows[3].age_index = 20;
    CHECK_THROWS_AS(MortalityDataset{rows}, DataError);
    rows[3].age_index = 4;
    rows[5].exposure = 0.0;
    CHECK_THROWS_AS(MortalityDataset{rows}, DataError);
}

TEST_CASE("a later truncation rescales the Gompertz level by exp(10 b)") {
    const auto data = oracle::noiseless(oracle::japan2015_gompertz, 41, 1e5);
    const auto early = fit(ModelKind::Gompertz, data);
    const auto late = fit(ModelKind::Gompertz, truncate_and_reindex(data, 80));
    const double b = early.theta_hat[1];
    CHECK(oracle::rel_diff(late.theta_hat[1], b) < 1e-6);
    CHECK(oracle::rel_diff(late.theta_hat[0], early.theta_hat[0] * std::exp(10.0 * b)) < 1e-6);
    CHECK(oracle::rel_diff(b, 0.1094) < 1e-6);
}
