#include "oracles.hpp"

#include "mortlaw/error.hpp"
#include "mortlaw/simulator.hpp"
#include "mortlaw/validation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mortlaw;

namespace {

MortalityDataset simulated(ModelKind model, std::uint64_t seed) {
    SimSpec spec;
    spec.theta = model == ModelKind::Gompertz ? oracle::japan2015_gompertz
                                              : ParamVector{ModelKind::Makeham, {0.015, 0.11, 0.004}};
    spec.exposure = 2e4;
    spec.seed = seed;
    return simulate_counts(spec);
}

// Smaller search for properties that do not depend on the GA budget.
FitConfig quick() {
    FitConfig config;
    config.ga.population_size = 60;
    config.ga.generations = 120;
    config.ga.stall_generations = 25;
    return config;
}

} // namespace

TEST_CASE("observed log rate") {
    const MortalityDataset data{{{0, 100.0, 1000.0},
                                 {1, 50.0, 50.0},
                                 {2, 0.0, 10.0},
                                 {3, 1.0, 10.0},
                                 {4, 1.0, 10.0},
                                 {5, 1.0, 10.0}}};
    CHECK(*observed_log_rate(data, 0) == doctest::Approx(-2.302585).epsilon(1e-7));
    CHECK(*observed_log_rate(data, 1) == 0.0);
    CHECK_FALSE(observed_log_rate(data, 2).has_value());
    CHECK_THROWS_AS(observed_log_rate(data, 6), DataError);
}

TEST_CASE("noiseless data gives near-zero cross-validated error") {
    for (const auto &theta : {oracle::japan2015_gompertz,
                              ParamVector{ModelKind::Makeham, {0.015, 0.11, 0.004}}}) {
        const auto data = oracle::noiseless(theta, 41, 1e5);
        const auto report = loocv_mape(theta.model, data);
        INFO(to_string(theta.model));
        CHECK(report.mape < 0.5);
        CHECK(report.per_age.size() == 41);
        CHECK(report.fold_warnings == 0);
    }
}

TEST_CASE("report invariants") {
    const auto data = simulated(ModelKind::Gompertz, 3);
    const auto report = loocv_mape(ModelKind::Gompertz, data);
    CHECK(report.model == ModelKind::Gompertz);
    double sum = 0.0, lo = 1e300, hi = 0.0;
    int previous = -1;
    for (const auto &e : report.per_age) {
        CHECK(e.abs_pct_error >= 0.0);
        CHECK(e.age_index > previous);
        previous = e.age_index;
        CHECK(e.abs_pct_error ==
              doctest::Approx(100.0 * std::fabs((e.observed_log_rate - e.predicted_log_hazard) /
                                                e.observed_log_rate)));
        CHECK(e.observed_log_rate == *observed_log_rate(data, static_cast<std::size_t>(e.age_index)));
        sum += e.abs_pct_error;
        lo = std::min(lo, e.abs_pct_error);
        hi = std::max(hi, e.abs_pct_error);
    }
    CHECK(report.mape == doctest::Approx(sum / report.per_age.size()).epsilon(1e-14));
    CHECK(report.mape >= lo);
    CHECK(report.mape <= hi);
}

TEST_CASE("zero-death and zero-log-rate ages are excluded and recorded") {
    auto base = simulated(ModelKind::Gompertz, 4);
    std::vector<DatasetRow> rows(base.rows().begin(), base.rows().end());
    rows[38].deaths = 0.0;
    rows[39].deaths = 0.0;
    rows[40].deaths = rows[40].exposure; // log rate exactly 0
    const MortalityDataset data{rows};
    const auto report = loocv_mape(ModelKind::Gompertz, data);
    CHECK(report.skipped_ages == std::vector<int>{38, 39});
    CHECK(report.per_age.size() == 38);
    REQUIRE(report.skips.size() == 3);
    CHECK(report.skips[0].reason == SkipReason::ZeroDeaths);
    CHECK(report.skips[2].reason == SkipReason::LogRateNearZero);
    CHECK(report.skips[2].age_index == 40);
    for (const auto &e : report.per_age) {
        CHECK(e.age_index < 38);
    }
}

TEST_CASE("too few usable ages") {
    std::vector<DatasetRow> rows;
    for (int k = 0; k < 8; ++k) {
        rows.push_back({k, k < 3 ? 0.0 : 10.0 + k, 1000.0});
    }
    CHECK_THROWS_AS(loocv_mape(ModelKind::Gompertz, MortalityDataset{rows}), DataError);
}

TEST_CASE("cross-validation is deterministic, order-free and execution-independent") {
    const auto data = simulated(ModelKind::Makeham, 5);
    std::vector<DatasetRow> reversed(data.rows().rbegin(), data.rows().rend());
    const MortalityDataset shuffled{reversed};
    const auto parallel = loocv_mape(ModelKind::Makeham, data, quick(), Execution::Parallel);
    const auto again = loocv_mape(ModelKind::Makeham, data, quick(), Execution::Parallel);
    const auto serial = loocv_mape(ModelKind::Makeham, data, quick(), Execution::Serial);
    const auto reordered = loocv_mape(ModelKind::Makeham, shuffled, quick(), Execution::Parallel);
    for (const auto *other : {&again, &serial, &reordered}) {
        CHECK(other->mape == parallel.mape);
        REQUIRE(other->per_age.size() == parallel.per_age.size());
        for (std::size_t i = 0; i < parallel.per_age.size(); ++i) {
            CHECK(other->per_age[i].predicted_log_hazard == parallel.per_age[i].predicted_log_hazard);
        }
    }
}

TEST_CASE("fold seeds differ per age and follow the base seed") {
    CHECK(fold_seed(1, 0) != fold_seed(1, 1));
    CHECK(fold_seed(1, 0) != fold_seed(2, 0));
    CHECK(fold_seed(7, 3) == fold_seed(7, 3));
}

TEST_CASE("model comparison") {
    const auto data = simulated(ModelKind::Makeham, 6);

    SUBCASE("a single model matches direct calls") {
        const auto rows = compare_models(data, {ModelKind::Gompertz});
        REQUIRE(rows.size() == 1);
        REQUIRE(rows[0].ok());
        CHECK(rows[0].fit->theta_hat == fit(ModelKind::Gompertz, data).theta_hat);
        CHECK(rows[0].cv->mape == loocv_mape(ModelKind::Gompertz, data).mape);
    }
    SUBCASE("duplicate entries give identical rows") {
        const auto rows = compare_models(data, {ModelKind::Gompertz, ModelKind::Gompertz});
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].fit->theta_hat == rows[1].fit->theta_hat);
        CHECK(rows[0].cv->mape == rows[1].cv->mape);
    }
    SUBCASE("sorted by error with failures last") {
        FitConfig config = quick();
        config.fixed["c"] = 0.004; // only meaningful for Makeham
        const auto rows = compare_models(
            data, {ModelKind::Gompertz, ModelKind::Makeham, ModelKind::Beard}, config);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].model == ModelKind::Makeham);
        CHECK(rows[0].ok());
        CHECK_FALSE(rows[1].ok());
        CHECK_FALSE(rows[2].ok());
        CHECK(rows[1].error.find("unknown parameter") != std::string::npos);
    }
    SUBCASE("ordering by mape") {
        const auto rows = compare_models(data, {ModelKind::Gompertz, ModelKind::Makeham}, quick());
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].mape() <= rows[1].mape());
    }
}
