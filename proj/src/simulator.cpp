#include "mortlaw/simulator.hpp"

#include "mortlaw/error.hpp"

#include <cmath>
#include <sstream>

namespace mortlaw {

namespace {

constexpr double kInversionLimit = 10.0;

double poisson_inversion(Rng &rng, double mean) {
    const double u = rng.uniform();
    double k = 0.0;
    double prob = std::exp(-mean);
    double cumulative = prob;
    // The cap only matters if rounding leaves cumulative just below u.
    while (u > cumulative && k < 1000.0) {
        k += 1.0;
        prob *= mean / k;
        cumulative += prob;
    }
    return k;
}

// Hormann (1993), transformed rejection with squeeze.
double poisson_ptrs(Rng &rng, double mean) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) {
            return k;
        }
        if (k < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0)) {
            return k;
        }
    }
}

} // namespace

double sample_poisson(Rng &rng, double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw ConfigError{"Poisson mean must be finite and nonnegative"};
    }
    if (mean == 0.0) {
        return 0.0;
    }
    return mean < kInversionLimit ? poisson_inversion(rng, mean) : poisson_ptrs(rng, mean);
}

MortalityDataset simulate_counts(const SimSpec &spec) {
    validate_domain(spec.theta);
    if (spec.max_age <= spec.truncation_age) {
        throw ConfigError{"simulation needs max_age > truncation_age"};
    }
    const auto ages = static_cast<std::size_t>(spec.max_age - spec.truncation_age + 1);
    std::vector<double> exposure;
    if (const auto *constant = std::get_if<double>(&spec.exposure)) {
        exposure.assign(ages, *constant);
    } else {
        exposure = std::get<std::vector<double>>(spec.exposure);
        if (exposure.size() != ages) {
            throw ConfigError{"exposure profile has " + std::to_string(exposure.size()) +
                              " entries for " + std::to_string(ages) + " ages"};
        }
    }
    for (double e : exposure) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            throw ConfigError{"simulation exposures must be positive and finite"};
        }
    }

    Rng rng{spec.seed};
    std::vector<DatasetRow> rows;
    rows.reserve(ages);
    for (std::size_t k = 0; k < ages; ++k) {
        const double mean = detail::hazard(spec.theta.model, spec.theta.values,
                                           static_cast<double>(k)) *
                            exposure[k];
        if (!std::isfinite(mean)) {
            throw ConfigError{"expected deaths overflow at age " +
                              std::to_string(spec.truncation_age + static_cast<int>(k))};
        }
        rows.push_back({static_cast<int>(k), sample_poisson(rng, mean), exposure[k]});
    }

    std::ostringstream label;
    label << "simulated " << to_string(spec.theta.model);
    const auto names = param_names(spec.theta.model);
    for (std::size_t i = 0; i < names.size(); ++i) {
        label << (i == 0 ? " " : ",") << names[i] << '=' << format_roundtrip(spec.theta[i]);
    }
    label << " seed=" << spec.seed;
    try {
        return MortalityDataset{std::move(rows), spec.truncation_age, label.str()};
    } catch (const DataError &e) {
        throw ConfigError{e.what()};
    }
}

} // namespace mortlaw
