#pragma once

#include "homog/grid.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <memory>
#include <string>

namespace homog {

/// Piecewise-affine (d=1) / bilinear (d=2) function on a MacroGrid with
/// optional zero-Dirichlet boundary data. Immutable after construction.
class MacroFunction {
public:
    MacroFunction(std::shared_ptr<const MacroGrid> grid, Eigen::VectorXd nodal,
                  bool zero_dirichlet);

    /// Nodal interpolant of a callable; boundary values are zeroed when
    /// `zero_dirichlet`. Throws on non-finite node values.
    static MacroFunction interpolate(std::shared_ptr<const MacroGrid> grid,
                                     const std::function<double(std::array<double, 2>)>& f,
                                     bool zero_dirichlet = false);
    static MacroFunction zero(std::shared_ptr<const MacroGrid> grid, bool zero_dirichlet = true);

    const MacroGrid& grid() const { return *grid_; }
    std::shared_ptr<const MacroGrid> grid_ptr() const { return grid_; }
    const Eigen::VectorXd& nodal() const { return nodal_; }
    bool zero_dirichlet() const { return zero_dirichlet_; }

    double value(const std::array<double, 2>& x) const;
    std::array<double, 2> gradient(const std::array<double, 2>& x) const;

    /// Interior dof vector (boundary nodes dropped).
    Eigen::VectorXd interior() const;
    static MacroFunction from_interior(std::shared_ptr<const MacroGrid> grid,
                                       const Eigen::VectorXd& interior);

    void write_csv(const std::string& path) const;

private:
    std::shared_ptr<const MacroGrid> grid_;
    Eigen::VectorXd nodal_;
    bool zero_dirichlet_;
};

/// Y-periodic piecewise-polynomial function on a CellGrid. Evaluation wraps
/// the argument; the zero-mean variant subtracts the quadrature mean.
class CellFunction {
public:
    CellFunction(std::shared_ptr<const CellGrid> grid, Eigen::VectorXd nodal);

    static CellFunction interpolate(std::shared_ptr<const CellGrid> grid,
                                    const std::function<double(std::array<double, 2>)>& f,
                                    bool zero_mean = false);
    static CellFunction zero(std::shared_ptr<const CellGrid> grid);

    const CellGrid& grid() const { return *grid_; }
    std::shared_ptr<const CellGrid> grid_ptr() const { return grid_; }
    const Eigen::VectorXd& nodal() const { return nodal_; }

    double value(const std::array<double, 2>& y) const;
    double value1(double y) const { return value({y, 0.0}); }
    std::array<double, 2> gradient(const std::array<double, 2>& y) const;

    /// Exact quadrature mean over Y (trapezoid = exact for P1/Q1 periodic).
    double mean() const;
    CellFunction minus_mean() const;

    /// Nodal gradient recovery: central differences on the periodic grid,
    /// one component per axis. Derived data, recomputable at will.
    std::array<CellFunction, 2> nodal_gradient() const;

    void write_csv(const std::string& path) const;

private:
    std::shared_ptr<const CellGrid> grid_;
    Eigen::VectorXd nodal_;
};

/// (integral |g|^p)^(1/p) by elementwise Gauss quadrature (>= order 3).
/// Throws for p < 1.
double lp_norm(const MacroFunction& g, double p, int gauss_points = 4);
double lp_norm(const CellFunction& g, double p, int gauss_points = 4);

/// (integral |Dg|^p)^(1/p).
double w1p_seminorm(const MacroFunction& g, double p, int gauss_points = 4);
double w1p_seminorm(const CellFunction& g, double p, int gauss_points = 4);

/// Lp distance between two macro functions, quadrature on the finer grid
/// of the two (the other is evaluated by interpolation).
double lp_distance(const MacroFunction& g1, const MacroFunction& g2, double p,
                   int gauss_points = 4);

/// integral_Y f(y) g(y) dy by elementwise Gauss quadrature.
double cell_integral_against(const CellFunction& f,
                             const std::function<double(std::array<double, 2>)>& g,
                             int gauss_points = 4);

/// integral_Y (d f / d y_axis)(y) g(y) dy.
double cell_gradient_integral_against(const CellFunction& f,
                                      const std::function<double(std::array<double, 2>)>& g,
                                      int axis, int gauss_points = 4);

} // namespace homog
