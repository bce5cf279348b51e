#include "oracles.hpp"

#include "mortlaw/decomposition.hpp"
#include "mortlaw/error.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mortlaw;

TEST_CASE("age grid") {
    const auto grid = make_age_grid(0.0, 40.0, 0.25);
    CHECK(grid.size() == 161);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 40.0);
    const auto ragged = make_age_grid(0.0, 1.0, 0.3);
    CHECK(ragged.back() == 1.0);
    CHECK(ragged.size() == 5);
    CHECK_THROWS_AS(make_age_grid(0.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("component curves") {
    const auto grid = make_age_grid(0.0, 40.0, 0.25);
    for (const auto &row : oracle::table1) {
        const auto theta = oracle::as_canonical(row);
        const auto curves = decompose_density(theta, grid);
        INFO(std::string{row.country} << " " << row.year);
        CHECK(curves.premature_share == theta[3]);
        CHECK(curves.premature_share < 0.04);
        CHECK(std::fabs(curves.premature_mass - theta[3]) < 1e-6);
        CHECK(std::fabs(curves.senescent_mass - (1.0 - theta[3])) < 1e-6);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(curves.premature_density[i] >= 0.0);
            CHECK(curves.senescent_density[i] >= 0.0);
            CHECK(curves.total_density[i] ==
                  curves.premature_density[i] + curves.senescent_density[i]);
            CHECK(oracle::rel_diff(curves.total_density[i], mixture_density(theta, grid[i])) <= 1e-14);
        }

        // Independent quadrature of each component over the whole line.
        const long double p = theta[3];
        const auto prem = [&](long double x) { return p * theta[2] * std::exp(-theta[2] * x); };
        const auto sen = [&](long double x) {
            return oracle::mixture_density(theta, x) - prem(x);
        };
        CHECK(std::fabs(static_cast<double>(oracle::integrate_panels(prem, 2000.0L, 1e-13L)) -
                        theta[3]) < 1e-6);
        CHECK(std::fabs(static_cast<double>(oracle::integrate_panels(sen, 2000.0L, 1e-13L)) -
                        (1.0 - theta[3])) < 1e-6);
    }
}

TEST_CASE("premature share of the Japan 2015 estimate") {
    const auto theta = from_reported(oracle::japan2015_mixture);
    const auto curves = decompose_density(theta, make_age_grid(0.0, 40.0, 0.25));
    CHECK(curves.premature_share == 0.0126);
    // Reported there as 1.2599 % of deaths.
    CHECK(std::fabs(100.0 * curves.premature_share - 1.2599) < 0.005);
    CHECK(curves.window_premature_mass < curves.premature_mass);
}

TEST_CASE("pure senescent mixture has no premature density") {
    const ParamVector theta{ModelKind::Mixture, {0.25, 0.11, 0.2, 0.0}};
    const auto curves = decompose_density(theta, make_age_grid(0.0, 40.0, 0.5));
    for (double v : curves.premature_density) {
        CHECK(v == 0.0);
    }
    CHECK(curves.premature_mass == 0.0);
}

TEST_CASE("decomposition input checks") {
    CHECK_THROWS_AS(decompose_density(oracle::japan2015_gompertz, make_age_grid(0, 1, 0.5)),
                    DomainError);
    const std::vector<double> unsorted{0.0, 2.0, 1.0};
    CHECK_THROWS_AS(decompose_density(from_reported(oracle::japan2015_mixture), unsorted),
                    DomainError);
}

TEST_CASE("senescent modal age") {
    SUBCASE("closed form for the Gompertz density") {
        for (double a : {0.01, 0.1, 0.3, 0.9}) {
            for (double b : {0.05, 0.1, 0.15}) {
                const ParamVector theta{ModelKind::Mixture, {a, b, 0.2, 0.02}};
                const double expect = std::log(1.0 / a) / b;
                if (expect > 60.0) {
                    continue;
                }
                const auto mode = senescent_modal_age(theta);
                CHECK(std::fabs(mode.offset - expect) < 1e-5);
                CHECK(mode.age == doctest::Approx(70.0 + mode.offset));
                CHECK_FALSE(mode.boundary);
            }
        }
    }
    SUBCASE("between 80 and 90 for every reference row") {
        for (const auto &row : oracle::table1) {
            const auto mode = senescent_modal_age(oracle::as_canonical(row));
            INFO(std::string{row.country} << " " << row.year << " mode " << mode.age);
            CHECK(mode.age >= 80.0);
            CHECK(mode.age <= 90.0);
            // Read literally as (a, b) the rows place the mode past age 130.
            CHECK(senescent_modal_age(oracle::as_printed(row), 70, 200.0).age > 130.0);
        }
    }
    SUBCASE("a >= 1 puts the mode at the truncation age") {
        const auto mode = senescent_modal_age({ModelKind::Mixture, {1.5, 0.1, 0.2, 0.02}});
        CHECK(mode.age == 70.0);
        CHECK(mode.boundary);
    }
    SUBCASE("truncation age shifts the reported age") {
        const ParamVector theta{ModelKind::Mixture, {0.1, 0.1, 0.2, 0.02}};
        CHECK(senescent_modal_age(theta, 60).age == doctest::Approx(60.0 + std::log(10.0) / 0.1));
    }
    SUBCASE("requires p < 1") {
        CHECK_THROWS_AS(senescent_modal_age({ModelKind::Mixture, {0.1, 0.1, 0.2, 1.0}}),
                        DomainError);
    }
}

TEST_CASE("CSV and SVG output") {
    const auto theta = from_reported(oracle::japan2015_mixture);
    const auto curves = decompose_density(theta, make_age_grid(0.0, 2.0, 1.0));
    std::ostringstream csv;
    write_components_csv(curves, csv);
    std::istringstream lines{csv.str()};
    std::string line;
    std::getline(lines, line);
    CHECK(line == "age,premature,senescent,total");
    std::getline(lines, line);
    CHECK(line.rfind("70,", 0) == 0);
    int count = 1;
    while (std::getline(lines, line)) {
        ++count;
    }
    CHECK(count == 3);

    const auto svg = components_svg(curves, "Japan <2015> & more");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("Japan &lt;2015&gt; &amp; more") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}
