#pragma once

#include "homog/grid.hpp"

#include <array>
#include <functional>

namespace homog {

/// How macro elements are subdivided when integrands carry an x/eps trace.
/// Every period of length eps gets at least `subcells_per_period` Gauss
/// subcells; when `align_cells` > 0 the subcell boundaries are additionally
/// aligned with the images of that many equal cell subdivisions (so kinks of
/// piecewise cell data land on subcell boundaries) whenever the element size
/// permits it.
struct OscillatoryRuleOptions {
    int subcells_per_period = 8; ///< floor enforced at 8
    int gauss_points = 4;
    int align_cells = 0;
    int max_subcells_per_element = 65536;
};

/// Number of subcells for one macro element of width h. Throws
/// QuadratureError when the requested resolution exceeds the budget.
int oscillatory_subcells(double h, double eps, const OscillatoryRuleOptions& opts);

struct OscillatoryIntegral {
    double value = 0.0;
    /// |value - value on a once-refined subcell grid|.
    double error_estimate = 0.0;
};

/// Quadrature of integral_Omega f(x, x/eps) dx over a macro grid, with the
/// error estimated by subcell refinement. Throws QuadratureError for eps <= 0
/// or when eps is not resolvable within the subcell budget.
OscillatoryIntegral integrate_oscillatory(
    const std::function<double(std::array<double, 2>, std::array<double, 2>)>& integrand,
    double eps, const MacroGrid& grid, const OscillatoryRuleOptions& opts = {});

/// True when eps = 1/k for integer k (within 1e-9), the admissibility rule
/// for sweep tables on the unit box.
bool eps_is_admissible(double eps);
/// 1/eps rounded to the nearest integer.
int eps_periods(double eps);

} // namespace homog
