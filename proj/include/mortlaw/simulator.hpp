#pragma once

#include "mortlaw/dataset.hpp"
#include "mortlaw/laws.hpp"
#include "mortlaw/rng.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace mortlaw {

/// Either one exposure for every age or an explicit per-age list.
using ExposureProfile = std::variant<double, std::vector<double>>;

struct SimSpec {
    ParamVector theta;
    int truncation_age{default_truncation_age};
    int max_age{110};
    ExposureProfile exposure{1e5};
    std::uint64_t seed{1};
};

/// Draws D_k ~ Poisson(mu(k) E_k) independently per age from one seeded stream
/// in age order. Throws ConfigError for an invalid spec or non-finite mean.
MortalityDataset simulate_counts(const SimSpec &spec);

/// One Poisson draw: inversion below mean 10, transformed rejection (PTRS) above.
double sample_poisson(Rng &rng, double mean);

} // namespace mortlaw
