#pragma once

#include "mortlaw/dataset.hpp"
#include "mortlaw/laws.hpp"
#include "mortlaw/optimizer.hpp"
#include "mortlaw/parallel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mortlaw {

/// log(D_k / E_k) for dataset row k, or nullopt when D_k = 0.
std::optional<double> observed_log_rate(const MortalityDataset &data, std::size_t k);

/// Ages with |log m_k| below this are excluded from MAPE (the relative error
/// divides by log m_k).
inline constexpr double min_abs_log_rate = 1e-6;

struct CvAgeError {
    int age_index{0};
    double observed_log_rate{0.0};
    double predicted_log_hazard{0.0};
    double abs_pct_error{0.0};
    std::vector<std::string> bounds_hit;
};

enum class SkipReason { ZeroDeaths, LogRateNearZero, FoldFailed };

struct CvSkip {
    int age_index{0};
    SkipReason reason{SkipReason::ZeroDeaths};
    std::string detail;
};

std::string to_string(SkipReason reason);

struct CvReport {
    ModelKind model{ModelKind::Gompertz};
    std::vector<CvAgeError> per_age;
    /// Mean of per_age abs_pct_error, in percent.
    double mape{0.0};
    /// Ages with D_k = 0 (kept in every fold fit, absent from MAPE).
    std::vector<int> skipped_ages;
    /// Every age left out of the MAPE and why, including failed folds.
    std::vector<CvSkip> skips;
    /// Number of folds whose fit did not reach a stationary point.
    std::size_t fold_warnings{0};
};

/// Seed for the fold that leaves out age index k.
std::uint64_t fold_seed(std::uint64_t seed, int age_index) noexcept;

/// Leave-one-age-out cross-validated MAPE of the log hazard:
/// 100 * |log m_k - log mu_k| / |log m_k| averaged over usable ages, each
/// predicted by a fit on all other ages. Folds run in parallel under
/// Execution::Parallel; the report is assembled in age order either way.
CvReport loocv_mape(ModelKind model, const MortalityDataset &data, const FitConfig &config = {},
                    Execution execution = Execution::Parallel);

struct ComparisonRow {
    ModelKind model{ModelKind::Gompertz};
    std::optional<FitResult> fit;
    std::optional<CvReport> cv;
    /// Set when fitting or cross-validation failed for this model.
    std::string error;

    bool ok() const noexcept { return error.empty(); }
    double mape() const noexcept;
};

/// Full-data fit and LOOCV MAPE per model, sorted by MAPE ascending with
/// failed models last.
std::vector<ComparisonRow> compare_models(const MortalityDataset &data,
                                          const std::vector<ModelKind> &models,
                                          const FitConfig &config = {},
                                          Execution execution = Execution::Parallel);

} // namespace mortlaw
