#include "mortlaw/decomposition.hpp"

#include "mortlaw/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace mortlaw {

namespace {

void require_mixture(const ParamVector &theta) {
    if (theta.model != ModelKind::Mixture) {
        throw DomainError{"decomposition requires mixture parameters, got " +
                          std::string{to_string(theta.model)}};
    }
    validate_domain(theta);
}

double log_senescent_shape(double a, double b, double x) {
    return std::log(a) + std::log(b) - a * std::expm1(b * x) + b * x;
}

template <class F>
double integrate(F f, double lo, double hi) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

std::vector<double> make_age_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start) || !std::isfinite(start) || !std::isfinite(stop)) {
        throw ConfigError{"age grid needs step > 0 and stop >= start"};
    }
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
        grid.push_back(start + static_cast<double>(i) * step);
    }
    if (stop - grid.back() > 1e-9 * std::max(1.0, std::abs(stop))) {
        grid.push_back(stop);
    }
    return grid;
}

double premature_density(const ParamVector &theta, double x) {
    require_mixture(theta);
    const double lambda = theta[2], p = theta[3];
    return p == 0.0 ? 0.0 : p * lambda * std::exp(-lambda * x);
}

double senescent_density(const ParamVector &theta, double x) {
    require_mixture(theta);
    const double a = theta[0], b = theta[1], p = theta[3];
    if (p == 1.0) {
        return 0.0;
    }
    return (1.0 - p) * a * b * std::exp(-a * std::expm1(b * x) + b * x);
}

ComponentCurves decompose_density(const ParamVector &theta, std::span<const double> age_grid,
                                  int truncation_age) {
    require_mixture(theta);
    if (!std::is_sorted(age_grid.begin(), age_grid.end())) {
        throw DomainError{"age grid must be sorted ascending"};
    }
    ComponentCurves curves;
    curves.truncation_age = truncation_age;
    curves.premature_share = theta[3];
    for (double x : age_grid) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw DomainError{"age grid offsets must be finite and nonnegative"};
        }
        const double early = premature_density(theta, x);
        const double late = senescent_density(theta, x);
        curves.ages.push_back(x);
        curves.premature_density.push_back(early);
        curves.senescent_density.push_back(late);
        curves.total_density.push_back(early + late);
    }
    const auto early = [&](double x) { return premature_density(theta, x); };
    const auto late = [&](double x) { return senescent_density(theta, x); };
    const double inf = std::numeric_limits<double>::infinity();
    curves.premature_mass = integrate(early, 0.0, inf);
    curves.senescent_mass = integrate(late, 0.0, inf);
    if (!age_grid.empty()) {
        curves.window_premature_mass = integrate(early, age_grid.front(), age_grid.back());
        curves.window_senescent_mass = integrate(late, age_grid.front(), age_grid.back());
    }
    return curves;
}

ModalAge senescent_modal_age(const ParamVector &theta, int truncation_age, double bracket_upper,
                             double tol) {
    require_mixture(theta);
    if (theta[3] >= 1.0) {
        throw DomainError{"senescent modal age needs p < 1"};
    }
    if (!(theta[0] > 0.0) || !(theta[1] > 0.0)) {
        throw DomainError{"senescent modal age needs a > 0 and b > 0"};
    }
    if (!(bracket_upper > 0.0) || !(tol > 0.0)) {
        throw ConfigError{"modal age search needs a positive bracket and tolerance"};
    }
    const double a = theta[0], b = theta[1];
    const auto objective = [&](double x) { return log_senescent_shape(a, b, x); };

    // Golden-section search for the maximum of a concave function.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = bracket_upper;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = objective(c), fd = objective(d);
    while (hi - lo > tol) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }
    double x = 0.5 * (lo + hi);
    ModalAge mode;
    mode.boundary = x <= 2.0 * tol || x >= bracket_upper - 2.0 * tol;
    if (mode.boundary) {
        x = x <= 2.0 * tol ? 0.0 : bracket_upper;
    }
    mode.offset = x;
    mode.age = truncation_age + x;
    return mode;
}

void write_components_csv(const ComponentCurves &curves, std::ostream &out) {
    out << "age,premature,senescent,total\n";
    for (std::size_t i = 0; i < curves.ages.size(); ++i) {
        out << fmt6(curves.truncation_age + curves.ages[i]) << ','
            << fmt6(curves.premature_density[i]) << ',' << fmt6(curves.senescent_density[i])
            << ',' << fmt6(curves.total_density[i]) << '\n';
    }
}

namespace {

std::string xml_escape(const std::string &text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

} // namespace

std::string components_svg(const ComponentCurves &curves, const std::string &title) {
    constexpr double width = 720, height = 420, left = 60, right = 20, top = 40, bottom = 50;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"15\">" << xml_escape(title) << "</text>\n";
    if (curves.ages.empty()) {
        svg << "</svg>\n";
        return svg.str();
    }
    const double x0 = curves.truncation_age + curves.ages.front();
    const double x1 = curves.truncation_age + curves.ages.back();
    double y1 = 0.0;
    for (double v : curves.total_density) {
        y1 = std::max(y1, v);
    }
    if (!(y1 > 0.0)) {
        y1 = 1.0;
    }
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    auto px = [&](double age) {
        return left + (x1 > x0 ? (age - x0) / (x1 - x0) : 0.0) * plot_w;
    };
    auto py = [&](double v) { return top + plot_h - v / y1 * plot_h; };

    svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
        << "\" y2=\"" << top + plot_h << "\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + plot_h << "\"/>\n</g>\n";
    svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int t = 0; t <= 5; ++t) {
        const double age = x0 + (x1 - x0) * t / 5.0;
        const double val = y1 * t / 5.0;
        svg << "<text x=\"" << px(age) << "\" y=\"" << top + plot_h + 16
            << "\" text-anchor=\"middle\">" << fmt6(age) << "</text>\n";
        svg << "<text x=\"" << left - 6 << "\" y=\"" << py(val) + 4 << "\" text-anchor=\"end\">"
            << fmt6(val) << "</text>\n";
    }
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\">age</text>\n</g>\n";

    const struct {
        const std::vector<double> *values;
        const char *colour;
        const char *name;
    } series[] = {{&curves.premature_density, "#d62728", "premature"},
                  {&curves.senescent_density, "#1f77b4", "senescent"},
                  {&curves.total_density, "#000000", "total"}};
    int legend = 0;
    for (const auto &s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < curves.ages.size(); ++i) {
            svg << px(curves.truncation_age + curves.ages[i]) << ',' << py((*s.values)[i]) << ' ';
        }
        svg << "\"/>\n";
        const double ly = top + 12 + 16 * legend++;
        svg << "<line x1=\"" << left + plot_w - 110 << "\" y1=\"" << ly << "\" x2=\""
            << left + plot_w - 90 << "\" y2=\"" << ly << "\" stroke=\"" << s.colour
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << left + plot_w - 84 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.name << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace mortlaw
