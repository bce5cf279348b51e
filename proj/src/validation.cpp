#include "mortlaw/validation.hpp"

#include "mortlaw/error.hpp"
#include "mortlaw/likelihood.hpp"
#include "mortlaw/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mortlaw {

namespace {

struct FoldOutcome {
    bool ok{false};
    double predicted{0.0};
    std::vector<std::string> bounds_hit;
    std::string failure;
};

FoldOutcome run_fold(ModelKind model, const DeathSample &sample, std::size_t position,
                     const FitConfig &base, int age_index) {
    FoldOutcome outcome;
    try {
        FitConfig config = base;
        config.ga.seed = fold_seed(base.ga.seed, age_index);
        config.execution = Execution::Serial;
        const auto result = fit(model, sample.without(position), config);
        if (!result.refine_converged) {
            outcome.failure = "fold fit did not reach a stationary point (gradient norm " +
                              std::to_string(result.gradient_norm) + ")";
            return outcome;
        }
        outcome.predicted = log_hazard(result.theta_hat, sample.age_offset[position]);
        outcome.bounds_hit = result.bounds_hit;
        outcome.ok = std::isfinite(outcome.predicted);
        if (!outcome.ok) {
            outcome.failure = "predicted log hazard is not finite";
        }
    } catch (const std::exception &e) {
        outcome.failure = e.what();
    }
    return outcome;
}

} // namespace

std::optional<double> observed_log_rate(const MortalityDataset &data, std::size_t k) {
    if (k >= data.size()) {
        throw DataError{"age index " + std::to_string(k) + " outside dataset"};
    }
    const auto &row = data[k];
    if (row.deaths <= 0.0) {
        return std::nullopt;
    }
    return std::log(row.deaths / row.exposure);
}

std::string to_string(SkipReason reason) {
    switch (reason) {
    case SkipReason::ZeroDeaths:
        return "zero_deaths";
    case SkipReason::LogRateNearZero:
        return "log_rate_near_zero";
    case SkipReason::FoldFailed:
        return "fold_failed";
    }
    return "unknown";
}

std::uint64_t fold_seed(std::uint64_t seed, int age_index) noexcept {
    return mix_seed(seed, static_cast<std::uint64_t>(age_index));
}

CvReport loocv_mape(ModelKind model, const MortalityDataset &data, const FitConfig &config,
                    Execution execution) {
    config.ga.validate();
    CvReport report;
    report.model = model;

    std::vector<std::size_t> usable;
    std::vector<double> observed;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const int age = data[k].age_index;
        const auto rate = observed_log_rate(data, k);
        if (!rate) {
            report.skipped_ages.push_back(age);
            report.skips.push_back({age, SkipReason::ZeroDeaths, "no deaths observed"});
            continue;
        }
        if (std::abs(*rate) < min_abs_log_rate) {
            report.skips.push_back({age, SkipReason::LogRateNearZero,
                                    "observed log rate too close to zero for a relative error"});
            continue;
        }
        usable.push_back(k);
        observed.push_back(*rate);
    }
    const std::size_t needed = std::max<std::size_t>(6, param_count(model) + 2);
    if (usable.size() < needed) {
        throw DataError{"cross-validation of " + std::string{to_string(model)} + " needs " +
                        std::to_string(needed) + " usable ages, got " +
                        std::to_string(usable.size())};
    }

    const auto sample = DeathSample::from(data);
    std::vector<FoldOutcome> outcomes(usable.size());
    const auto folds = static_cast<std::ptrdiff_t>(usable.size());
    if (execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
        for (std::ptrdiff_t f = 0; f < folds; ++f) {
            const auto k = usable[static_cast<std::size_t>(f)];
            outcomes[static_cast<std::size_t>(f)] =
                run_fold(model, sample, k, config, data[k].age_index);
        }
    } else {
        for (std::ptrdiff_t f = 0; f < folds; ++f) {
            const auto k = usable[static_cast<std::size_t>(f)];
            outcomes[static_cast<std::size_t>(f)] =
                run_fold(model, sample, k, config, data[k].age_index);
        }
    }

    double total = 0.0;
    for (std::size_t f = 0; f < usable.size(); ++f) {
        const int age = data[usable[f]].age_index;
        auto &outcome = outcomes[f];
        if (!outcome.ok) {
            ++report.fold_warnings;
            report.skips.push_back({age, SkipReason::FoldFailed, outcome.failure});
            continue;
        }
        const double err = 100.0 * std::abs((observed[f] - outcome.predicted) / observed[f]);
        report.per_age.push_back(
            {age, observed[f], outcome.predicted, err, std::move(outcome.bounds_hit)});
        total += err;
    }
    std::sort(report.skips.begin(), report.skips.end(),
              [](const CvSkip &l, const CvSkip &r) { return l.age_index < r.age_index; });
    if (report.per_age.empty()) {
        throw NumericalError{"every cross-validation fold of " + std::string{to_string(model)} +
                             " failed"};
    }
    report.mape = total / static_cast<double>(report.per_age.size());
    return report;
}

double ComparisonRow::mape() const noexcept {
    return cv ? cv->mape : std::numeric_limits<double>::infinity();
}

std::vector<ComparisonRow> compare_models(const MortalityDataset &data,
                                          const std::vector<ModelKind> &models,
                                          const FitConfig &config, Execution execution) {
    std::vector<ComparisonRow> rows;
    rows.reserve(models.size());
    for (auto model : models) {
        ComparisonRow row;
        row.model = model;
        try {
            FitConfig full = config;
            full.execution = execution;
            row.fit = fit(model, data, full);
            row.cv = loocv_mape(model, data, config, execution);
        } catch (const std::exception &e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow &l, const ComparisonRow &r) {
        if (l.ok() != r.ok()) {
            return l.ok();
        }
        return l.mape() < r.mape();
    });
    return rows;
}

} // namespace mortlaw
