#include "mortlaw/likelihood.hpp"

#include "mortlaw/error.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace mortlaw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            carry_ += (sum_ - t) + v;
        } else {
            carry_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_{0.0};
    double carry_{0.0};
};

} // namespace

void validate_sample(const DeathSample &sample) {
    if (sample.empty()) {
        throw DataError{"likelihood needs at least one age"};
    }
    if (sample.deaths.size() != sample.size() || sample.exposure.size() != sample.size()) {
        throw DataError{"sample columns have different lengths"};
    }
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (!(sample.exposure[i] > 0.0) || !std::isfinite(sample.exposure[i])) {
            throw DataError{"exposure must be positive (row " + std::to_string(i) + ")"};
        }
        if (!(sample.deaths[i] >= 0.0) || !std::isfinite(sample.deaths[i])) {
            throw DataError{"deaths must be nonnegative (row " + std::to_string(i) + ")"};
        }
        if (!(sample.age_offset[i] >= 0.0)) {
            throw DataError{"age offsets must be nonnegative (row " + std::to_string(i) + ")"};
        }
    }
}

namespace detail {

double poisson_loglik(ModelKind model, std::span<const double> v,
                      const DeathSample &sample) noexcept {
    CompensatedSum total;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double log_mu = detail::log_hazard(model, v, sample.age_offset[k]);
        if (std::isnan(log_mu)) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double log_rate = log_mu + std::log(sample.exposure[k]);
        const double rate = std::exp(log_rate);
        const double d = sample.deaths[k];
        if (d > 0.0) {
            if (log_rate == kNegInf) {
                return kNegInf;
            }
            total.add(d * log_rate);
        }
        if (!std::isfinite(rate)) {
            return kNegInf;
        }
        total.add(-rate);
    }
    return total.value();
}

double centered_loglik(ModelKind model, std::span<const double> v,
                       const DeathSample &sample) noexcept {
    CompensatedSum total;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double log_mu = detail::log_hazard(model, v, sample.age_offset[k]);
        if (std::isnan(log_mu)) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double log_rate = log_mu + std::log(sample.exposure[k]);
        const double rate = std::exp(log_rate);
        const double d = sample.deaths[k];
        if (!std::isfinite(rate)) {
            return kNegInf;
        }
        if (d > 0.0) {
            if (log_rate == kNegInf) {
                return kNegInf;
            }
            total.add(d * (log_rate - std::log(d)) - (rate - d));
        } else {
            total.add(-rate);
        }
    }
    return total.value();
}

void loglik_gradient(ModelKind model, std::span<const double> v, const DeathSample &sample,
                     std::span<double> out) noexcept {
    const std::size_t n = param_count(model);
    std::array<CompensatedSum, 4> sums{};
    std::array<double, 4> partials{};
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double x = sample.age_offset[k];
        const double mu = detail::hazard(model, v, x);
        const double residual = sample.deaths[k] / mu - sample.exposure[k];
        detail::hazard_partials(model, v, x, std::span<double>{partials.data(), n});
        for (std::size_t i = 0; i < n; ++i) {
            sums[i].add(residual * partials[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = sums[i].value();
    }
}

} // namespace detail

double poisson_loglik(const ParamVector &theta, const DeathSample &sample) {
    validate_domain(theta);
    validate_sample(sample);
    return detail::poisson_loglik(theta.model, theta.values, sample);
}

double poisson_loglik(const ParamVector &theta, const MortalityDataset &data) {
    return poisson_loglik(theta, DeathSample::from(data));
}

std::vector<double> loglik_gradient(const ParamVector &theta, const DeathSample &sample) {
    validate_domain(theta);
    if (!is_interior(theta)) {
        throw DomainError{"log-likelihood gradient requires interior parameters"};
    }
    validate_sample(sample);
    std::vector<double> out(theta.size());
    detail::loglik_gradient(theta.model, theta.values, sample, out);
    for (double g : out) {
        if (!std::isfinite(g)) {
            throw NumericalError{"log-likelihood gradient is not finite at this theta"};
        }
    }
    return out;
}

std::vector<double> loglik_gradient(const ParamVector &theta, const MortalityDataset &data) {
    return loglik_gradient(theta, DeathSample::from(data));
}

std::vector<double> central_gradient(const Objective &f, std::span<const double> at, double step) {
    if (!(step > 0.0)) {
        throw ConfigError{"finite-difference step must be positive"};
    }
    std::vector<double> point(at.begin(), at.end());
    std::vector<double> grad(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(at[i]));
        point[i] = at[i] + h;
        const double up = f(point);
        point[i] = at[i] - h;
        const double down = f(point);
        point[i] = at[i];
        // (x+h)-(x-h) is not exactly 2h in floating point; divide by the realised span.
        grad[i] = (up - down) / ((at[i] + h) - (at[i] - h));
    }
    return grad;
}

std::vector<double> fd_gradient(const ParamVector &theta, const DeathSample &sample, double step) {
    validate_domain(theta);
    validate_sample(sample);
    const auto names = param_names(theta.model);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(theta[i]));
        const bool upper_edge = theta.model == ModelKind::Mixture && i == 3 && theta[i] + h > 1.0;
        if (theta[i] - h <= 0.0 || upper_edge) {
            throw DomainError{"finite-difference oracle inapplicable: " + std::string{names[i]} +
                              " is within one step of its domain edge"};
        }
    }
    const Objective f = [&](std::span<const double> v) {
        return detail::poisson_loglik(theta.model, v, sample);
    };
    return central_gradient(f, theta.values, step);
}

std::vector<double> fd_gradient(const ParamVector &theta, const MortalityDataset &data,
                                double step) {
    return fd_gradient(theta, DeathSample::from(data), step);
}

} // namespace mortlaw
