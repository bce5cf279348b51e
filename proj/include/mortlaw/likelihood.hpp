#pragma once

#include "mortlaw/dataset.hpp"
#include "mortlaw/laws.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mortlaw {

/// Poisson log-likelihood sum_k D_k log(mu_k E_k) - mu_k E_k over every age in
/// the sample (the log D_k! constant is dropped). Returns -infinity when an age
/// with D_k > 0 has zero or overflowing expected deaths, so a global search can
/// still rank such candidates.
double poisson_loglik(const ParamVector &theta, const DeathSample &sample);
double poisson_loglik(const ParamVector &theta, const MortalityDataset &data);

/// Analytic gradient sum_k (D_k / mu_k - E_k) d mu_k / d theta_i. Requires an
/// interior theta.
std::vector<double> loglik_gradient(const ParamVector &theta, const DeathSample &sample);
std::vector<double> loglik_gradient(const ParamVector &theta, const MortalityDataset &data);

/// Central differences of poisson_loglik with per-parameter step
/// step * max(1, |theta_i|). Test and diagnostic use only. Throws DomainError
/// when a parameter sits within one step of its domain edge.
std::vector<double> fd_gradient(const ParamVector &theta, const DeathSample &sample,
                                double step = 1e-6);
std::vector<double> fd_gradient(const ParamVector &theta, const MortalityDataset &data,
                                double step = 1e-6);

/// Throws DataError unless the sample is nonempty with E_k > 0 and D_k >= 0.
void validate_sample(const DeathSample &sample);

using Objective = std::function<double(std::span<const double>)>;

/// Central-difference gradient of an arbitrary objective, same step rule.
std::vector<double> central_gradient(const Objective &f, std::span<const double> at, double step);

namespace detail {

double poisson_loglik(ModelKind model, std::span<const double> v, const DeathSample &sample) noexcept;
/// Poisson log-likelihood minus its value at the saturated fit (lambda_k = D_k):
/// sum_k D_k log(lambda_k / D_k) - lambda_k + D_k. Same maximiser, but O(ages)
/// in magnitude instead of O(total deaths), which keeps line searches precise.
double centered_loglik(ModelKind model, std::span<const double> v, const DeathSample &sample) noexcept;
void loglik_gradient(ModelKind model, std::span<const double> v, const DeathSample &sample,
                     std::span<double> out) noexcept;

} // namespace detail

} // namespace mortlaw
