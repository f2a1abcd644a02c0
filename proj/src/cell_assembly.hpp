#pragma once

// Shared assembly pieces for periodic cell-grid FEM problems (P1 in 1D,
// Q1 in 2D, zero mean enforced through a scalar Lagrange multiplier).
// Internal to the library.

#include "homog/grid.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>

namespace homog::detail {

/// 2x2 coefficient matrix at a cell point (only [0] used in 1D, row-major).
using MatrixCoeff = std::function<std::array<double, 4>(std::array<double, 2>)>;

MatrixCoeff scalar_coeff(std::function<double(std::array<double, 2>)> a);
MatrixCoeff identity_coeff();

/// Stiffness integral a(y) D psi_j . D psi_i with per-element Gauss points;
/// `subcells` >= 1 subdivides elements (used to align with coefficient kinks).
Eigen::SparseMatrix<double> cell_stiffness(const CellGrid& grid, const MatrixCoeff& a,
                                           int gauss_points = 4, int subcells = 1);

/// Load integral f(y) psi_i.
Eigen::VectorXd cell_load(const CellGrid& grid, const std::function<double(std::array<double, 2>)>& f,
                          int gauss_points = 4, int subcells = 1);

/// Integration weights of the nodal basis (all equal to h^d on these grids).
Eigen::VectorXd cell_mass_weights(const CellGrid& grid);

/// Solves K u = rhs subject to sum_i w_i u_i = 0 through the augmented
/// saddle system [K w; w^T 0]. Returns the algebraic residual
/// |K u + lambda w - rhs|_inf through `residual`.
Eigen::VectorXd solve_zero_mean(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& rhs,
                                const Eigen::VectorXd& weights, double& residual);

/// Subcell count aligning element-local quadrature with `breakpoints` equal
/// subdivisions of the unit cell (0 = smooth, no constraint).
int alignment_subcells(const CellGrid& grid, int breakpoints);

} // namespace homog::detail
