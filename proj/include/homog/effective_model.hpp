#pragma once

#include "homog/cell_problems.hpp"
#include "homog/epsilon_problem.hpp"

#include <memory>
#include <utility>

namespace homog {

/// Cell-averaged coefficients of the linear (p = 2) limit. `abar` and `bbar`
/// are the effective diffusion int_Y a(I + D chi) and effective convection
/// int_Y V chi; `cbar` = int_Y a D zeta and `sbar` = int_Y V zeta are the
/// companions generated by the split ansatz u1 = Du.chi + u zeta.
struct LinearEffectiveModel {
    int dim = 1;
    std::array<double, 4> abar{0, 0, 0, 0}; ///< row-major d x d
    std::array<double, 2> bbar{0, 0};
    std::array<double, 2> cbar{0, 0};
    double sbar = 0.0;

    double abar_min_eigenvalue() const;
};

LinearEffectiveModel build_linear_effective(const LinearCorrectors& correctors,
                                            const PeriodicField& a, const PotentialField& V);
LinearEffectiveModel build_linear_effective(const LinearCorrectors& correctors,
                                            const MatrixPeriodicField& a,
                                            const PotentialField& V);

/// Which macro model the linear solve uses: the split-ansatz model with all
/// four coefficients, or the paper-literal one carrying only abar and bbar.
enum class Ansatz { split, paper };

/// Solves -div(abar Du + cbar u) + bbar . Du + sbar u = f with zero
/// Dirichlet data. Returns the solution and the algebraic residual.
std::pair<MacroFunction, double> solve_macro_linear(const LinearEffectiveModel& model,
                                                    const SpatialFn& f,
                                                    std::shared_ptr<const MacroGrid> grid,
                                                    Ansatz ansatz = Ansatz::split);

/// The nonlinear effective evaluator is the memoizing cell-problem handle
/// with (a, V, p) fixed.
using NonlinearEffectiveEvaluator = CellEvaluator;

/// One macro quadrature point with its cell corrector and effective data.
struct MacroQuadCell {
    int element = 0;
    std::array<double, 2> local{0, 0};
    std::array<double, 2> x{0, 0};
    double weight = 0.0;
    double theta = 0.0;
    std::array<double, 2> xi{0, 0};
    CellFunction chi;
    std::array<double, 2> q{0, 0};
    double v = 0.0;
};

/// Macro solution paired with its per-quadrature-point cell correctors
/// u1(x_g, .) = chi(., theta_g, xi_g).
struct TwoScalePair {
    MacroFunction u;
    std::vector<MacroQuadCell> cells;
    int gauss_points = 2;
};

struct MacroNonlinearOptions {
    double tol = 1e-10; ///< l_inf of the assembled macro residual
    int max_picard = 300;
    double relax = 0.5;      ///< Picard relaxation factor
    bool newton = true;      ///< switch to FD-Newton once Picard is close
    double newton_switch = 1e-4;
    int max_newton = 60;
    double fd_step = 1e-6;   ///< relative step for flux derivatives
    int gauss_points = 2;
};

/// Heterogeneous-multiscale solve of the macroscopic equation: every macro
/// quadrature point queries the evaluator at (theta, xi) = (u_h, Du_h);
/// relaxed Picard on frozen cell weights, optionally polished by Newton with
/// finite-difference flux derivatives. Throws SolveError on stagnation.
std::pair<TwoScalePair, SolveStats> solve_macro_nonlinear(const NonlinearEffectiveEvaluator& ev,
                                                          const SpatialFn& f,
                                                          std::shared_ptr<const MacroGrid> grid,
                                                          const MacroNonlinearOptions& opts = {});

/// Pure verification of the coupled weak forms at the given pair: returns
/// {global, local} residuals, the global one as max_i |R_i| over the macro
/// basis (with q, v recomputed from the stored correctors), the local one as
/// the max over quadrature points of the l_inf cell residual at `delta`.
std::pair<double, double> residual_two_scale(const TwoScalePair& pair,
                                             const NonlinearEffectiveEvaluator& ev,
                                             const SpatialFn& f, double delta = 0.0);

} // namespace homog
