#include "homog/corrector.hpp"

#include "homog/errors.hpp"
#include "homog/newton.hpp"
#include "cell_assembly.hpp"

#include <cmath>
#include <sstream>

namespace homog {

CorrectorPotential solve_corrector_potential(const PotentialField& V,
                                             std::shared_ptr<const CellGrid> grid,
                                             double tol) {
    if (V.dim() != grid->dim())
        throw ValidationError("solve_corrector_potential: dimension mismatch");
    if (!V.mean_ok()) {
        std::ostringstream os;
        os << "solve_corrector_potential: V fails the zero-mean check, residual "
           << V.mean_residual() << " > tol " << V.mean_tol();
        throw ValidationError(os.str());
    }

    // Weak form of laplace(Phi) = V on the torus: (D Phi, D psi) = -(V, psi).
    int subcells = detail::alignment_subcells(*grid, V.base().breakpoint_cells());
    auto K = detail::cell_stiffness(*grid, detail::identity_coeff(), 4, subcells);
    auto rhs_v = detail::cell_load(
        *grid, [&](std::array<double, 2> y) { return V.sample(y); }, 4, subcells);
    Eigen::VectorXd rhs = -rhs_v;
    auto weights = detail::cell_mass_weights(*grid);

    double residual = 0.0;
    Eigen::VectorXd phi_nodal = detail::solve_zero_mean(K, rhs, weights, residual);
    if (!(residual <= tol))
        throw SolveError("corrector potential solve did not reach tolerance", SolveStats{});

    CellFunction phi(grid, std::move(phi_nodal));
    phi = phi.minus_mean(); // multiplier already enforces this; make it exact
    auto grad = phi.nodal_gradient();
    return CorrectorPotential{std::move(phi), std::move(grad), residual};
}

} // namespace homog
