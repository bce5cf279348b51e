#include "mortlaw/laws.hpp"

#include "mortlaw/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace mortlaw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<std::string_view, 3> kBeardNames{"a", "b", "delta"};
constexpr std::array<std::string_view, 2> kGompertzNames{"a", "b"};
constexpr std::array<std::string_view, 3> kMakehamNames{"a", "b", "c"};
constexpr std::array<std::string_view, 4> kPerksNames{"a", "b", "gamma", "delta"};
constexpr std::array<std::string_view, 4> kMixtureNames{"a", "b", "lambda", "p"};

double safe_log(double v) noexcept { return v > 0.0 ? std::log(v) : -kInf; }

// Log-odds of the senescent component among survivors at x:
// z = log((1-p) S_gompertz) - log(p S_exponential).
double mixture_log_odds(std::span<const double> v, double x) noexcept {
    const double a = v[0], b = v[1], lambda = v[2], p = v[3];
    if (p <= 0.0) {
        return kInf;
    }
    if (p >= 1.0) {
        return -kInf;
    }
    return std::log1p(-p) - std::log(p) - a * std::expm1(b * x) + lambda * x;
}

// w = weight of the exponential component among survivors, 1 - w = sigmoid(z).
void mixture_weights(double z, double &w, double &one_minus_w) noexcept {
    if (z > 0.0) {
        const double t = std::exp(-z);
        w = t / (1.0 + t);
        one_minus_w = 1.0 / (1.0 + t);
    } else {
        const double t = std::exp(z);
        w = 1.0 / (1.0 + t);
        one_minus_w = t / (1.0 + t);
    }
}

void check_age(double x) {
    if (!std::isfinite(x) || x < 0.0) {
        throw DomainError{"age offset must be finite and nonnegative, got " + std::to_string(x)};
    }
}

void require_mixture(const ParamVector &theta, const char *what) {
    if (theta.model != ModelKind::Mixture) {
        throw DomainError{std::string{what} + " requires mixture parameters, got " +
                          std::string{to_string(theta.model)}};
    }
}

} // namespace

std::size_t param_count(ModelKind model) noexcept { return param_names(model).size(); }

std::span<const std::string_view> param_names(ModelKind model) noexcept {
    switch (model) {
    case ModelKind::Beard:
        return kBeardNames;
    case ModelKind::Gompertz:
        return kGompertzNames;
    case ModelKind::Makeham:
        return kMakehamNames;
    case ModelKind::Perks:
        return kPerksNames;
    case ModelKind::Mixture:
        return kMixtureNames;
    }
    return {};
}

std::string_view to_string(ModelKind model) noexcept {
    switch (model) {
    case ModelKind::Beard:
        return "beard";
    case ModelKind::Gompertz:
        return "gompertz";
    case ModelKind::Makeham:
        return "makeham";
    case ModelKind::Perks:
        return "perks";
    case ModelKind::Mixture:
        return "mixture";
    }
    return "unknown";
}

ModelKind model_from_string(std::string_view name) {
    std::string lowered{name};
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto model : all_models) {
        if (to_string(model) == lowered) {
            return model;
        }
    }
    throw ConfigError{"unknown model '" + std::string{name} +
                      "' (expected beard, gompertz, makeham, perks or mixture)"};
}

ParamVector::ParamVector(ModelKind kind, std::vector<double> vals)
    : model{kind}, values{std::move(vals)} {
    if (values.size() != param_count(model)) {
        throw DomainError{std::string{to_string(model)} + " expects " +
                          std::to_string(param_count(model)) + " parameters, got " +
                          std::to_string(values.size())};
    }
}

std::size_t param_index(ModelKind model, std::string_view name) noexcept {
    const auto names = param_names(model);
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? static_cast<std::size_t>(-1)
                             : static_cast<std::size_t>(it - names.begin());
}

double ParamVector::get(std::string_view name) const {
    const auto i = param_index(model, name);
    if (i >= values.size()) {
        throw ConfigError{"model " + std::string{to_string(model)} + " has no parameter '" +
                          std::string{name} + "'"};
    }
    return values[i];
}

void validate_domain(const ParamVector &theta) {
    const auto names = param_names(theta.model);
    if (theta.values.size() != names.size()) {
        throw DomainError{std::string{to_string(theta.model)} + " expects " +
                          std::to_string(names.size()) + " parameters, got " +
                          std::to_string(theta.values.size())};
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double v = theta.values[i];
        if (!std::isfinite(v) || v < 0.0) {
            throw DomainError{"parameter " + std::string{names[i]} +
                              " must be finite and nonnegative, got " + std::to_string(v)};
        }
    }
    if (theta.model == ModelKind::Mixture && theta.values[3] > 1.0) {
        throw DomainError{"mixture weight p must lie in [0, 1], got " +
                          std::to_string(theta.values[3])};
    }
}

bool is_interior(const ParamVector &theta) noexcept {
    if (theta.values.size() != param_count(theta.model)) {
        return false;
    }
    for (double v : theta.values) {
        if (!std::isfinite(v) || v <= 0.0) {
            return false;
        }
    }
    return theta.model != ModelKind::Mixture || theta.values[3] < 1.0;
}

std::vector<Interval> default_bounds(ModelKind model) {
    constexpr double lo = 1e-10;
    std::vector<Interval> bounds;
    for (auto name : param_names(model)) {
        if (name == "b") {
            bounds.push_back({lo, 2.0});
        } else if (name == "p") {
            bounds.push_back({0.0, 1.0});
        } else {
            bounds.push_back({lo, 10.0});
        }
    }
    return bounds;
}

namespace detail {

double softplus(double t) noexcept {
    if (t > 0.0) {
        return t + std::log1p(std::exp(-t));
    }
    return std::log1p(std::exp(t));
}

double log_add_exp(double u, double w) noexcept {
    if (u == -kInf) {
        return w;
    }
    if (w == -kInf) {
        return u;
    }
    const double hi = std::max(u, w);
    return hi + std::log1p(std::exp(-std::abs(u - w)));
}

double log_hazard(ModelKind model, std::span<const double> v, double x) noexcept {
    const double a = v[0], b = v[1];
    const double log_senescent = safe_log(a) + b * x;
    switch (model) {
    case ModelKind::Gompertz:
        return log_senescent;
    case ModelKind::Makeham:
        return log_add_exp(log_senescent, safe_log(v[2]));
    case ModelKind::Beard:
        return log_senescent - softplus(safe_log(v[2]) + b * x);
    case ModelKind::Perks:
        return log_add_exp(safe_log(v[2]), log_senescent) - softplus(safe_log(v[3]) + b * x);
    case ModelKind::Mixture: {
        const double z = mixture_log_odds(v, x);
        const double log_w = -softplus(z);
        const double log_one_minus_w = -softplus(-z);
        return log_add_exp(log_w + safe_log(v[2]),
                           log_one_minus_w + safe_log(a) + safe_log(b) + b * x);
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double hazard(ModelKind model, std::span<const double> v, double x) noexcept {
    const double a = v[0], b = v[1];
    const double e = std::exp(b * x);
    double mu = kInf;
    switch (model) {
    case ModelKind::Gompertz:
        mu = a * e;
        break;
    case ModelKind::Makeham:
        mu = a * e + v[2];
        break;
    case ModelKind::Beard:
        mu = a * e / (1.0 + v[2] * e);
        break;
    case ModelKind::Perks:
        mu = (v[2] + a * e) / (1.0 + v[3] * e);
        break;
    case ModelKind::Mixture: {
        double w = 0.0, one_minus_w = 0.0;
        mixture_weights(mixture_log_odds(v, x), w, one_minus_w);
        const double senescent = one_minus_w == 0.0 ? 0.0 : one_minus_w * a * b * e;
        mu = w * v[2] + senescent;
        break;
    }
    }
    if (std::isfinite(mu)) {
        return mu;
    }
    return std::exp(log_hazard(model, v, x));
}

void hazard_partials(ModelKind model, std::span<const double> v, double x,
                     std::span<double> out) noexcept {
    const double a = v[0], b = v[1];
    const double e = std::exp(b * x);
    switch (model) {
    case ModelKind::Gompertz:
        out[0] = e;
        out[1] = a * x * e;
        return;
    case ModelKind::Makeham:
        out[0] = e;
        out[1] = a * x * e;
        out[2] = 1.0;
        return;
    case ModelKind::Beard: {
        const double delta = v[2];
        const double den = 1.0 + delta * e;
        out[0] = e / den;
        out[1] = a * x * e / (den * den);
        out[2] = -a * e * e / (den * den);
        return;
    }
    case ModelKind::Perks: {
        const double gamma = v[2], delta = v[3];
        const double den = 1.0 + delta * e;
        out[0] = e / den;
        out[1] = x * e * (a - delta * gamma) / (den * den);
        out[2] = 1.0 / den;
        out[3] = -e * (gamma + a * e) / (den * den);
        return;
    }
    case ModelKind::Mixture: {
        const double lambda = v[2], p = v[3];
        const double z = mixture_log_odds(v, x);
        double w = 0.0, one_minus_w = 0.0;
        mixture_weights(z, w, one_minus_w);
        const double senescent = a * b * e;
        const double gap = lambda - senescent;
        const double ww = w * one_minus_w;
        // dw/dtheta = -w(1-w) dz/dtheta
        out[0] = ww * std::expm1(b * x) * gap + one_minus_w * b * e;
        out[1] = ww * a * x * e * gap + one_minus_w * a * e * (1.0 + b * x);
        out[2] = -ww * x * gap + w;
        double dw_dp = 0.0;
        if (p <= 0.0) {
            dw_dp = std::exp(-lambda * x + a * std::expm1(b * x));
        } else if (p >= 1.0) {
            dw_dp = std::exp(-a * std::expm1(b * x) + lambda * x);
        } else {
            dw_dp = ww / (p * (1.0 - p));
        }
        out[3] = dw_dp * gap;
        return;
    }
    }
}

} // namespace detail

double hazard(const ParamVector &theta, double x) {
    validate_domain(theta);
    check_age(x);
    const double mu = detail::hazard(theta.model, theta.values, x);
    if (!std::isfinite(mu)) {
        throw NumericalError{"hazard of " + std::string{to_string(theta.model)} +
                             " overflows at x = " + std::to_string(x)};
    }
    return mu;
}

double log_hazard(const ParamVector &theta, double x) {
    validate_domain(theta);
    check_age(x);
    const double value = detail::log_hazard(theta.model, theta.values, x);
    if (std::isnan(value) || value == kInf) {
        throw NumericalError{"log hazard of " + std::string{to_string(theta.model)} +
                             " is not finite at x = " + std::to_string(x)};
    }
    return value;
}

std::vector<double> hazard_partials(const ParamVector &theta, double x) {
    validate_domain(theta);
    check_age(x);
    if (!is_interior(theta)) {
        throw DomainError{"hazard partials require interior parameters"};
    }
    std::vector<double> out(theta.size());
    detail::hazard_partials(theta.model, theta.values, x, out);
    for (double d : out) {
        if (!std::isfinite(d)) {
            throw NumericalError{"hazard partial overflows at x = " + std::to_string(x)};
        }
    }
    return out;
}

double mixture_density(const ParamVector &theta, double x) {
    require_mixture(theta, "mixture_density");
    validate_domain(theta);
    check_age(x);
    const double a = theta[0], b = theta[1], lambda = theta[2], p = theta[3];
    const double premature = p == 0.0 ? 0.0 : p * lambda * std::exp(-lambda * x);
    const double senescent =
        p == 1.0 ? 0.0 : (1.0 - p) * a * b * std::exp(-a * std::expm1(b * x) + b * x);
    return premature + senescent;
}

double mixture_survival(const ParamVector &theta, double x) {
    require_mixture(theta, "mixture_survival");
    validate_domain(theta);
    check_age(x);
    const double a = theta[0], b = theta[1], lambda = theta[2], p = theta[3];
    const double premature = p == 0.0 ? 0.0 : p * std::exp(-lambda * x);
    const double senescent = p == 1.0 ? 0.0 : (1.0 - p) * std::exp(-a * std::expm1(b * x));
    return premature + senescent;
}

ParamVector from_reported(const ReportedMixture &reported) {
    if (!(reported.shape > 0.0)) {
        throw DomainError{"reported Gompertz shape must be positive"};
    }
    ParamVector theta{ModelKind::Mixture,
                      {reported.rate / reported.shape, reported.shape, reported.lambda, reported.p}};
    validate_domain(theta);
    return theta;
}

ReportedMixture to_reported(const ParamVector &theta) {
    require_mixture(theta, "to_reported");
    validate_domain(theta);
    return {theta[1], theta[0] * theta[1], theta[2], theta[3]};
}

} // namespace mortlaw
