#pragma once

#include "mortlaw/dataset.hpp"
#include "mortlaw/laws.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mortlaw {

/// Premature (exponential) and senescent (Gompertz) parts of a fitted mixture's
/// death density on an age grid.
struct ComponentCurves {
    int truncation_age{default_truncation_age};
    /// Age offsets from the truncation age.
    std::vector<double> ages;
    std::vector<double> premature_density;
    std::vector<double> senescent_density;
    std::vector<double> total_density;
    /// The mixture weight p.
    double premature_share{0.0};
    /// Component masses integrated numerically over [0, inf).
    double premature_mass{0.0};
    double senescent_mass{0.0};
    /// Component masses integrated over the grid's span only.
    double window_premature_mass{0.0};
    double window_senescent_mass{0.0};
};

/// Evenly spaced offsets from start to stop inclusive (stop is appended if the
/// step does not land on it).
std::vector<double> make_age_grid(double start, double stop, double step);

/// Throws DomainError for non-mixture parameters or an unsorted grid.
ComponentCurves decompose_density(const ParamVector &theta, std::span<const double> age_grid,
                                  int truncation_age = default_truncation_age);

double premature_density(const ParamVector &theta, double x);
double senescent_density(const ParamVector &theta, double x);

struct ModalAge {
    /// On the true-age scale.
    double age{0.0};
    double offset{0.0};
    /// The maximiser sits on an end of the search bracket.
    bool boundary{false};
};

/// Mode of the senescent component density by golden-section search over
/// offsets [0, bracket_upper]. Requires p < 1.
ModalAge senescent_modal_age(const ParamVector &theta, int truncation_age = default_truncation_age,
                             double bracket_upper = 60.0, double tol = 1e-6);

/// CSV with columns age,premature,senescent,total (true ages).
void write_components_csv(const ComponentCurves &curves, std::ostream &out);

/// Minimal two-series (plus total) SVG line chart.
std::string components_svg(const ComponentCurves &curves, const std::string &title);

} // namespace mortlaw
