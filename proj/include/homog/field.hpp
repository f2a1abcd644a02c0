#pragma once

#include "homog/expression.hpp"
#include "homog/grid.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace homog {

enum class Smoothness { smooth, piecewise_constant, piecewise_linear };

/// Y-periodic scalar coefficient. Arguments are wrapped into [0,1)^d before
/// evaluation, so f(y) == f(y + k) holds for integer shifts by construction.
/// Backed by one of: expression presets (exact evaluation), a custom
/// expression, or nodal samples on a uniform periodic grid (multilinear
/// interpolation).
class PeriodicField {
public:
    static PeriodicField constant(int dim, double c);
    /// A + B*sin(2*pi*k*y1)
    static PeriodicField trig(int dim, double A, double B, int k);
    /// A + B*prod_axes sin(2*pi*k*y_axis)
    static PeriodicField prod_trig(int dim, double A, double B, int k);
    /// Piecewise constant over equal subintervals of the first axis.
    static PeriodicField piecewise(int dim, std::vector<double> values);
    static PeriodicField expression(int dim, const std::string& text);
    static PeriodicField nodal(int dim, int m, std::vector<double> values);
    /// One value per line; row-major (y1 fastest) for d = 2 with m^2 lines.
    static PeriodicField from_csv(int dim, int m, const std::string& path);

    int dim() const { return dim_; }
    Smoothness smoothness() const { return smoothness_; }

    double sample(const std::array<double, 2>& y) const;
    double sample1(double y) const { return sample({y, 0.0}); }

    /// Quadrature of the field mean over Y (Gauss per cell of a sample grid).
    double mean(int sample_elements = 256) const;
    /// Minimum and maximum absolute value over a sample grid's Gauss points.
    void scan_range(int sample_elements, double& min_value, double& max_abs) const;

    /// Number of equal subintervals per axis at which the evaluator may kink
    /// (nodal/piecewise data); 0 for globally smooth evaluators. Oscillatory
    /// quadrature aligns subcells with these breakpoints when possible.
    int breakpoint_cells() const;

    const std::string& description() const { return description_; }

private:
    enum class Kind { constant, trig, prod_trig, piecewise, expression, nodal };

    PeriodicField() = default;

    Kind kind_ = Kind::constant;
    int dim_ = 1;
    Smoothness smoothness_ = Smoothness::smooth;
    std::string description_;

    double A_ = 0.0, B_ = 0.0;
    int k_ = 1;
    std::vector<double> values_;
    int m_ = 0;
    Expression expr_;
};

/// Y-periodic potential with its quadrature mean recorded at construction.
/// (H3) requires the mean to vanish; `mean_ok()` checks it against a
/// configurable tolerance (default 1e-12, suited to expression presets).
class PotentialField {
public:
    explicit PotentialField(PeriodicField base, double mean_tol = 1e-12,
                            int sample_elements = 256);

    const PeriodicField& base() const { return base_; }
    int dim() const { return base_.dim(); }
    double sample(const std::array<double, 2>& y) const { return base_.sample(y); }
    double sample1(double y) const { return base_.sample1(y); }

    double mean_residual() const { return mean_residual_; }
    double mean_tol() const { return mean_tol_; }
    bool mean_ok() const { return std::abs(mean_residual_) <= mean_tol_; }

private:
    PeriodicField base_;
    double mean_residual_;
    double mean_tol_;
};

/// Symmetric positive definite matrix coefficient for the linear (p = 2)
/// path: constant per cell of an m x m subdivision of Y, d = 2 only. CSV
/// rows are a11,a12,a21,a22 per cell, row-major (y1 fastest).
class MatrixPeriodicField {
public:
    MatrixPeriodicField(int m, std::vector<std::array<double, 4>> cells);
    static MatrixPeriodicField from_csv(int m, const std::string& path);

    int dim() const { return 2; }
    int cells_per_axis() const { return m_; }
    std::array<double, 4> sample(const std::array<double, 2>& y) const;
    /// Smallest eigenvalue over all cells (ellipticity constant estimate).
    double min_eigenvalue() const;
    int breakpoint_cells() const { return m_; }

private:
    int m_;
    std::vector<std::array<double, 4>> cells_;
};

/// Outcome of the (H1)-(H3) scan over a sample grid.
struct ValidationReport {
    double min_a = 0.0;     ///< ellipticity constant estimate (min sampled a)
    double max_abs_a = 0.0; ///< boundedness estimate
    double mean_residual = 0.0;
    bool periodicity_ok = false;
    bool h1_pass = false;
    bool h3_pass = false;
    bool pass = false;
    std::string detail;
};

/// Scans a over `sample_elements` Gauss points per axis for strict positivity
/// (H1), spot-checks periodic wrapping (H2), and checks the recorded mean
/// residual of V (H3). Throws on dimension mismatch or an empty sample grid.
ValidationReport validate_hypotheses(const PeriodicField& a, const PotentialField& V,
                                     int sample_elements = 256);

} // namespace homog
