#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mortlaw {

enum class ModelKind { Beard, Gompertz, Makeham, Perks, Mixture };

inline constexpr std::array<ModelKind, 5> all_models{ModelKind::Beard, ModelKind::Gompertz,
                                                     ModelKind::Makeham, ModelKind::Perks,
                                                     ModelKind::Mixture};

std::size_t param_count(ModelKind model) noexcept;

/// Parameter labels in storage order: Beard (a, b, delta), Gompertz (a, b),
/// Makeham (a, b, c), Perks (a, b, gamma, delta), Mixture (a, b, lambda, p).
std::span<const std::string_view> param_names(ModelKind model) noexcept;

std::string_view to_string(ModelKind model) noexcept;

/// Case-insensitive lookup; throws ConfigError for unknown names.
ModelKind model_from_string(std::string_view name);

/// Named parameters of one law. Length is checked on construction; the value
/// domain is checked by validate_domain() at every public evaluation entry point.
struct ParamVector {
    ModelKind model{ModelKind::Gompertz};
    std::vector<double> values;

    ParamVector() = default;
    ParamVector(ModelKind kind, std::vector<double> vals);

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double &operator[](std::size_t i) { return values[i]; }

    /// Value by label, throws ConfigError for an unknown label.
    double get(std::string_view name) const;

    friend bool operator==(const ParamVector &, const ParamVector &) = default;
};

/// Index of a parameter by label within its model, or npos.
std::size_t param_index(ModelKind model, std::string_view name) noexcept;

/// Throws DomainError unless every value is finite and >= 0 and, for the
/// mixture, p <= 1.
void validate_domain(const ParamVector &theta);

/// Strictly inside the domain: every value > 0 and, for the mixture, p < 1.
bool is_interior(const ParamVector &theta) noexcept;

struct Interval {
    double lower{0.0};
    double upper{0.0};

    double width() const noexcept { return upper - lower; }
    bool contains(double v) const noexcept { return v >= lower && v <= upper; }
    friend bool operator==(const Interval &, const Interval &) = default;
};

/// Default search box: a, gamma, delta, c, lambda in [1e-10, 10]; b in [1e-10, 2];
/// p in [0, 1].
std::vector<Interval> default_bounds(ModelKind model);

/// Force of mortality mu(x | theta) at age offset x >= 0.
/// Throws DomainError on invalid input and NumericalError if the value overflows.
double hazard(const ParamVector &theta, double x);

/// log mu(x | theta), evaluated in log space so that b*x up to ~700 does not overflow.
double log_hazard(const ParamVector &theta, double x);

/// d mu / d theta_i for every parameter. Requires an interior theta.
std::vector<double> hazard_partials(const ParamVector &theta, double x);

/// Mixture density p*lambda*e^{-lambda x} + (1-p)*a*b*exp(-a(e^{bx}-1) + bx).
double mixture_density(const ParamVector &theta, double x);

/// Mixture survival p*e^{-lambda x} + (1-p)*exp(-a(e^{bx}-1)).
double mixture_survival(const ParamVector &theta, double x);

/// Mixture parameters in the convention used by published tables, where the
/// senescent component is a Gompertz law with hazard rate*e^{shape*x}.
/// The canonical mixture parameters relate by a = rate/shape, b = shape.
struct ReportedMixture {
    double shape{0.0};
    double rate{0.0};
    double lambda{0.0};
    double p{0.0};
};

ParamVector from_reported(const ReportedMixture &reported);
ReportedMixture to_reported(const ParamVector &theta);

namespace detail {

// Unchecked kernels used in hot loops after the caller validated the domain.
double log_hazard(ModelKind model, std::span<const double> v, double x) noexcept;
double hazard(ModelKind model, std::span<const double> v, double x) noexcept;
// Valid on the closed domain (including p in {0, 1}); writes param_count values.
void hazard_partials(ModelKind model, std::span<const double> v, double x,
                     std::span<double> out) noexcept;

double softplus(double t) noexcept;
double log_add_exp(double u, double w) noexcept;

} // namespace detail

} // namespace mortlaw
