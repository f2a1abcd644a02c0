#include "homog/quadrature.hpp"

#include "homog/errors.hpp"

#include <cmath>

namespace homog {

int oscillatory_subcells(double h, double eps, const OscillatoryRuleOptions& opts) {
    if (!(eps > 0)) throw QuadratureError("oscillatory quadrature: eps must be positive");
    int spp = std::max(8, opts.subcells_per_period);
    int base = std::max(1, static_cast<int>(std::ceil(spp * h / eps - 1e-12)));
    int q = base;
    if (opts.align_cells > 0) {
        // Images of the cell subdivision have spacing eps/align_cells; when an
        // element holds an integer count t of them, any multiple of t keeps
        // subcell boundaries on the kinks.
        double t_real = h * opts.align_cells / eps;
        double t_round = std::round(t_real);
        if (t_round >= 1.0 && std::abs(t_real - t_round) < 1e-9 * std::max(1.0, t_real)) {
            auto t = static_cast<int>(t_round);
            if (t <= opts.max_subcells_per_element) q = t * ((base + t - 1) / t);
        }
    }
    if (q > opts.max_subcells_per_element)
        throw QuadratureError("oscillatory quadrature: eps = " + std::to_string(eps)
                              + " needs " + std::to_string(q)
                              + " subcells per element, exceeding the budget of "
                              + std::to_string(opts.max_subcells_per_element));
    return q;
}

OscillatoryIntegral integrate_oscillatory(
    const std::function<double(std::array<double, 2>, std::array<double, 2>)>& integrand,
    double eps, const MacroGrid& grid, const OscillatoryRuleOptions& opts) {
    if (!(eps > 0)) throw QuadratureError("integrate_oscillatory: eps must be positive");

    auto run = [&](int refine) {
        const auto& g = GaussRule::get(opts.gauss_points);
        double h0 = grid.h(0);
        double h1 = grid.dim() == 2 ? grid.h(1) : 1.0;
        int q0 = refine * oscillatory_subcells(h0, eps, opts);
        int q1 = grid.dim() == 2 ? refine * oscillatory_subcells(h1, eps, opts) : 1;
        double w0 = h0 / q0;
        double w1 = grid.dim() == 2 ? h1 / q1 : 1.0;
        double total = 0.0;
        for (int e = 0; e < grid.num_elements(); ++e) {
            auto origin = grid.element_origin(e);
            if (grid.dim() == 1) {
                for (int s = 0; s < q0; ++s)
                    for (std::size_t k = 0; k < g.points.size(); ++k) {
                        double x = origin[0] + (s + g.points[k]) * w0;
                        total += w0 * g.weights[k]
                                 * integrand({x, 0.0}, wrap_unit({x / eps, 0.0}, 1));
                    }
            } else {
                for (int sj = 0; sj < q1; ++sj)
                    for (int si = 0; si < q0; ++si)
                        for (std::size_t kj = 0; kj < g.points.size(); ++kj)
                            for (std::size_t ki = 0; ki < g.points.size(); ++ki) {
                                double x0 = origin[0] + (si + g.points[ki]) * w0;
                                double x1 = origin[1] + (sj + g.points[kj]) * w1;
                                total += w0 * w1 * g.weights[ki] * g.weights[kj]
                                         * integrand({x0, x1},
                                                     wrap_unit({x0 / eps, x1 / eps}, 2));
                            }
            }
        }
        return total;
    };

    OscillatoryIntegral out;
    out.value = run(1);
    out.error_estimate = std::abs(out.value - run(2));
    return out;
}

bool eps_is_admissible(double eps) {
    if (!(eps > 0) || eps > 1.0) return false;
    double k = 1.0 / eps;
    return std::abs(k - std::round(k)) < 1e-9 * k;
}

int eps_periods(double eps) { return static_cast<int>(std::round(1.0 / eps)); }

} // namespace homog
