#pragma once

#include "homog/field.hpp"
#include "homog/function.hpp"

#include <memory>

namespace homog {

/// Potential corrector: the Y-periodic zero-mean solution of
/// laplace(Phi) = V with G = D_y Phi, so that div_y G = V. G is derived
/// from Phi by nodal gradient recovery, never stored independently.
struct CorrectorPotential {
    CellFunction phi;
    std::array<CellFunction, 2> grad;
    double residual = 0.0; ///< algebraic l_inf residual of the discrete system

    const CellFunction& g(int axis) const { return grad[static_cast<std::size_t>(axis)]; }
};

/// Solves the discrete cell Poisson problem for Phi. Requires V to pass the
/// zero-mean check (Fredholm solvability); throws ValidationError otherwise,
/// reporting the residual. `tol` bounds the accepted algebraic residual.
CorrectorPotential solve_corrector_potential(const PotentialField& V,
                                             std::shared_ptr<const CellGrid> grid,
                                             double tol = 1e-9);

} // namespace homog
